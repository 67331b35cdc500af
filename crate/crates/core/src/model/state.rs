use std::fmt;

/// Index of an interned ground atom in a [`GroundModel`](super::GroundModel).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Closed-world state: the set of ground atoms that hold.
///
/// Stored as a bit set sized to the model's atom table, so two states from
/// the same model compare and hash by content.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct State {
    words: Vec<u64>,
}

impl State {
    pub fn empty(atom_count: usize) -> Self {
        State {
            words: vec![0; atom_count.div_ceil(64)],
        }
    }

    pub fn from_atoms(atom_count: usize, atoms: impl IntoIterator<Item = AtomId>) -> Self {
        let mut s = State::empty(atom_count);
        for a in atoms {
            s.insert(a);
        }
        s
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        let i = atom.index();
        self.words
            .get(i / 64)
            .is_some_and(|w| w & (1u64 << (i % 64)) != 0)
    }

    pub fn insert(&mut self, atom: AtomId) {
        let i = atom.index();
        if i / 64 >= self.words.len() {
            self.words.resize(i / 64 + 1, 0);
        }
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn remove(&mut self, atom: AtomId) {
        let i = atom.index();
        if let Some(w) = self.words.get_mut(i / 64) {
            *w &= !(1u64 << (i % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, w)| {
            (0..64)
                .filter(move |b| w & (1u64 << b) != 0)
                .map(move |b| AtomId((wi * 64 + b) as u32))
        })
    }

    pub fn is_subset(&self, other: &State) -> bool {
        self.words.iter().enumerate().all(|(i, w)| {
            let o = other.words.get(i).copied().unwrap_or(0);
            w & !o == 0
        })
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|a| a.0)).finish()
    }
}
