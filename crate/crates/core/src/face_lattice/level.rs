/// The faces of one lattice level, with child and parent ids packed into flat
/// arrays. Face `i` owns `children[child_start[i]..child_start[i + 1]]`, and
/// likewise for parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    child_start: Vec<u32>,
    child_ids: Vec<u32>,
    parent_start: Vec<u32>,
    parent_ids: Vec<u32>,
}

impl Default for Level {
    fn default() -> Self {
        Self::with_capacity(0, 0)
    }
}

impl Level {
    pub(crate) fn with_capacity(faces: usize, links: usize) -> Self {
        let mut child_start = Vec::with_capacity(faces + 1);
        child_start.push(0);
        Self {
            child_start,
            child_ids: Vec::with_capacity(links),
            parent_start: Vec::new(),
            parent_ids: Vec::new(),
        }
    }

    /// `n` faces without children (the vertex level).
    pub(crate) fn leaves(n: usize) -> Self {
        Self {
            child_start: vec![0; n + 1],
            child_ids: Vec::new(),
            parent_start: Vec::new(),
            parent_ids: Vec::new(),
        }
    }

    pub(crate) fn push_face(&mut self, children: impl IntoIterator<Item = u32>) {
        self.child_ids.extend(children);
        self.child_start.push(self.child_ids.len() as u32);
    }

    /// Appends children to the face most recently pushed.
    pub(crate) fn extend_last(&mut self, children: impl IntoIterator<Item = u32>) {
        self.child_ids.extend(children);
        *self.child_start.last_mut().expect("non-empty offsets") = self.child_ids.len() as u32;
    }

    pub fn len(&self) -> usize {
        self.child_start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn children(&self, id: usize) -> &[u32] {
        &self.child_ids[self.child_start[id] as usize..self.child_start[id + 1] as usize]
    }

    /// Empty until the lattice is assembled.
    pub fn parents(&self, id: usize) -> &[u32] {
        if self.parent_start.is_empty() {
            return &[];
        }
        &self.parent_ids[self.parent_start[id] as usize..self.parent_start[id + 1] as usize]
    }

    /// Child lists in id order.
    pub fn faces(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.len()).map(move |i| self.children(i))
    }

    pub(crate) fn max_child(&self) -> Option<u32> {
        self.child_ids.iter().copied().max()
    }

    /// Sets parent links from the child lists of the level above, sorted by
    /// parent id. `above` is `None` for the top level.
    pub(crate) fn set_parents(&mut self, above: Option<&Level>) {
        let n = self.len();
        let mut start = vec![0u32; n + 1];
        let Some(above) = above else {
            self.parent_start = start;
            self.parent_ids = Vec::new();
            return;
        };
        for &c in &above.child_ids {
            start[c as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut ids = vec![0u32; above.child_ids.len()];
        for p in 0..above.len() {
            for &c in above.children(p) {
                ids[fill[c as usize] as usize] = p as u32;
                fill[c as usize] += 1;
            }
        }
        self.parent_start = start;
        self.parent_ids = ids;
    }
}
