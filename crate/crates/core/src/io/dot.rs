use std::fmt::Write as _;

use crate::cvtdg::{Child, Cvtdg, Vertex};
use crate::model::GroundModel;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn id(v: Vertex) -> String {
    match v {
        Vertex::Compound(i) => quote(&format!("c{i}")),
        Vertex::Primitive(i) => quote(&format!("p{i}")),
        Vertex::Method(i) => quote(&format!("m{i}")),
    }
}

/// Graphviz rendering of a decomposition graph. Compound tasks are boxes,
/// primitive tasks ellipses labeled with their `(p, c)` pairs, methods
/// diamonds. Annotated graphs add each vertex's EU to its label.
pub fn export_dot(graph: &Cvtdg, model: &GroundModel) -> String {
    let with_eu = |label: String, v: Vertex| match graph.eu(v) {
        Ok(eu) if graph.is_annotated() => format!("{label}\nEU={eu}"),
        _ => label,
    };
    if graph.is_empty() {
        return "digraph cvtdg { }".to_string();
    }
    let mut out = String::from("digraph cvtdg {\n");
    for (i, c) in graph.compound.iter().enumerate() {
        let v = Vertex::Compound(i);
        writeln!(
            out,
            "  {} [shape=box, label={}];",
            id(v),
            quote(&with_eu(c.task.to_string(), v))
        )
        .unwrap();
    }
    for (i, p) in graph.primitive.iter().enumerate() {
        let v = Vertex::Primitive(i);
        let pairs: Vec<String> = model
            .operator(p.operator)
            .costs
            .outcomes()
            .iter()
            .map(|(p, c)| format!("({p}, {c})"))
            .collect();
        let label = format!("{}\n{}", p.task, pairs.join(" "));
        writeln!(
            out,
            "  {} [shape=ellipse, label={}];",
            id(v),
            quote(&with_eu(label, v))
        )
        .unwrap();
    }
    for (i, m) in graph.methods.iter().enumerate() {
        let v = Vertex::Method(i);
        let label = model.method(m.method).to_string();
        writeln!(
            out,
            "  {} [shape=diamond, style=filled, fillcolor=gray, label={}];",
            id(v),
            quote(&with_eu(label, v))
        )
        .unwrap();
    }
    for (i, c) in graph.compound.iter().enumerate() {
        for m in &c.methods {
            writeln!(
                out,
                "  {} -> {};",
                id(Vertex::Compound(i)),
                id(Vertex::Method(*m))
            )
            .unwrap();
        }
    }
    for (i, m) in graph.methods.iter().enumerate() {
        for child in &m.children {
            if let Child::Vertex(v) = child {
                writeln!(out, "  {} -> {};", id(Vertex::Method(i)), id(*v)).unwrap();
            }
        }
    }
    out.push('}');
    out
}
