/// Fenwick tree over non-negative integer weights with prefix search.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<u64>,
    values: Vec<u64>,
    total: u64,
}

impl Fenwick {
    pub fn new(len: usize) -> Self {
        Fenwick {
            tree: vec![0; len + 1],
            values: vec![0; len],
            total: 0,
        }
    }

    pub fn from_values(values: &[u64]) -> Self {
        let mut f = Fenwick::new(values.len());
        for (i, &v) in values.iter().enumerate() {
            f.set(i, v);
        }
        f
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, pos: usize) -> u64 {
        self.values[pos]
    }

    pub fn set(&mut self, pos: usize, value: u64) {
        let old = self.values[pos];
        if old == value {
            return;
        }
        self.values[pos] = value;
        self.total = self.total + value - old;
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i] + value - old;
            i += i & i.wrapping_neg();
        }
    }

    /// Position whose cumulative range `[prefix, prefix + value)` contains
    /// `target`. Requires `target < total()`.
    pub fn find(&self, target: u64) -> usize {
        debug_assert!(target < self.total);
        let n = self.tree.len() - 1;
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
