//! Terms, literals, ground atoms and the typed object universe.

use std::collections::BTreeMap;
use std::fmt;

use super::ModelError;

/// Root of every type hierarchy. Declaring it is optional.
pub const ROOT_TYPE: &str = "object";

/// A task or literal argument: either a variable (`?x`) or an object name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Variable name, stored with its leading `?`.
    Var(String),
    Obj(String),
}

impl Term {
    pub fn parse(text: &str) -> Term {
        if text.starts_with('?') {
            Term::Var(text.to_string())
        } else {
            Term::Obj(text.to_string())
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Term::Var(s) | Term::Obj(s) => s,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn object(&self) -> Option<&str> {
        match self {
            Term::Obj(s) => Some(s),
            Term::Var(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A possibly lifted literal used in preconditions and effects.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
    pub negated: bool,
}

impl Literal {
    pub fn positive(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Literal {
            predicate: predicate.into(),
            args,
            negated: false,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        write_call(f, &self.predicate, self.args.iter().map(Term::as_str))
    }
}

/// A ground atom `pred(o1, ..., on)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Atom {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_call(f, &self.predicate, self.args.iter().map(String::as_str))
    }
}

/// A task occurrence `name(args)`; ground when every argument is an object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Task {
    pub name: String,
    pub args: Vec<Term>,
}

impl Task {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Task {
            name: name.into(),
            args,
        }
    }

    pub fn ground(name: impl Into<String>, args: &[&str]) -> Self {
        Task {
            name: name.into(),
            args: args.iter().map(|a| Term::Obj(a.to_string())).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| !a.is_var())
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_call(f, &self.name, self.args.iter().map(Term::as_str))
    }
}

pub(crate) fn write_call<'a>(
    f: &mut fmt::Formatter<'_>,
    name: &str,
    args: impl Iterator<Item = &'a str>,
) -> fmt::Result {
    f.write_str(name)?;
    f.write_str("(")?;
    for (i, a) in args.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        f.write_str(a)?;
    }
    f.write_str(")")
}

/// Typed variable declaration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Param {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

/// Single-inheritance type hierarchy rooted at [`ROOT_TYPE`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeHierarchy {
    parents: BTreeMap<String, String>,
}

impl TypeHierarchy {
    pub fn new(parents: BTreeMap<String, String>) -> Result<Self, ModelError> {
        for (child, parent) in &parents {
            if child == ROOT_TYPE {
                return Err(ModelError::InvalidType(format!(
                    "`{ROOT_TYPE}` cannot have a parent"
                )));
            }
            if parent != ROOT_TYPE && !parents.contains_key(parent) {
                return Err(ModelError::InvalidType(format!(
                    "type `{child}` has undeclared parent `{parent}`"
                )));
            }
        }
        for start in parents.keys() {
            let mut seen = vec![start.as_str()];
            let mut cur = start.as_str();
            while let Some(p) = parents.get(cur) {
                if seen.contains(&p.as_str()) {
                    return Err(ModelError::InvalidType(format!(
                        "type hierarchy has a cycle through `{start}`"
                    )));
                }
                seen.push(p);
                cur = p;
            }
        }
        Ok(TypeHierarchy { parents })
    }

    pub fn contains(&self, ty: &str) -> bool {
        ty == ROOT_TYPE || self.parents.contains_key(ty)
    }

    /// True when `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == ROOT_TYPE {
            return self.contains(ty);
        }
        let mut cur = ty;
        loop {
            if cur == ancestor {
                return true;
            }
            match self.parents.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    pub fn parents(&self) -> &BTreeMap<String, String> {
        &self.parents
    }
}

/// The problem's objects together with the domain's type hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub types: TypeHierarchy,
    objects: BTreeMap<String, String>,
}

impl Universe {
    pub fn new(
        types: TypeHierarchy,
        objects: BTreeMap<String, String>,
    ) -> Result<Self, ModelError> {
        for (obj, ty) in &objects {
            if !types.contains(ty) {
                return Err(ModelError::InvalidType(format!(
                    "object `{obj}` has unknown type `{ty}`"
                )));
            }
        }
        Ok(Universe { types, objects })
    }

    pub fn objects(&self) -> &BTreeMap<String, String> {
        &self.objects
    }

    pub fn type_of(&self, obj: &str) -> Option<&str> {
        self.objects.get(obj).map(String::as_str)
    }

    /// Objects whose type is `ty` or a subtype of it, in name order.
    pub fn objects_of(&self, ty: &str) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|(_, t)| self.types.is_subtype(t, ty))
            .map(|(o, _)| o.as_str())
            .collect()
    }

    pub fn has_object_of(&self, obj: &str, ty: &str) -> bool {
        self.type_of(obj)
            .is_some_and(|t| self.types.is_subtype(t, ty))
    }
}
