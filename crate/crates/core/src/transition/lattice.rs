use super::{FlowMatrix, FlowSystem};
use crate::error::{Error, Result};

/// Calls `visit` on every non-negative integer flow of `sys`, exactly once,
/// in lexicographic order of the row-major cells. Stops early when `visit`
/// returns `false`. Returns the number of points visited.
pub fn for_each_lattice_point<F: FnMut(&[u64]) -> bool>(sys: &FlowSystem, mut visit: F) -> u64 {
    let (k, l) = (sys.k(), sys.l());
    let mut cells = vec![0u64; k * l];
    let mut cols = sys.cols().to_vec();
    let mut count = 0u64;
    let mut walker = Walker {
        k,
        l,
        rows: sys.rows(),
        cells: &mut cells,
        cols: &mut cols,
        count: &mut count,
        stop: false,
    };
    walker.row(0, &mut visit);
    count
}

struct Walker<'a> {
    k: usize,
    l: usize,
    rows: &'a [u64],
    cells: &'a mut [u64],
    cols: &'a mut [u64],
    count: &'a mut u64,
    stop: bool,
}

impl Walker<'_> {
    fn row<F: FnMut(&[u64]) -> bool>(&mut self, i: usize, visit: &mut F) {
        if i + 1 == self.k {
            // the last row takes whatever the columns still need
            let base = i * self.l;
            self.cells[base..base + self.l].copy_from_slice(self.cols);
            *self.count += 1;
            if !visit(self.cells) {
                self.stop = true;
            }
            return;
        }
        let rest: u64 = self.cols.iter().sum();
        self.cell(i, 0, self.rows[i], rest, visit);
    }

    /// `left` nodes of row `i` remain for columns `j..`; `rest` is the
    /// residual demand of those columns.
    fn cell<F: FnMut(&[u64]) -> bool>(&mut self, i: usize, j: usize, left: u64, rest: u64, visit: &mut F) {
        let at = i * self.l + j;
        if j + 1 == self.l {
            self.cells[at] = left;
            self.cols[j] -= left;
            self.row(i + 1, visit);
            self.cols[j] += left;
            return;
        }
        let c = self.cols[j];
        let after = rest - c;
        let lo = left.saturating_sub(after);
        let hi = left.min(c);
        for u in lo..=hi {
            self.cells[at] = u;
            self.cols[j] = c - u;
            self.cell(i, j + 1, left - u, after, visit);
            if self.stop {
                break;
            }
        }
        self.cols[j] = c;
    }
}

/// All lattice points, or [`Error::EnumerationOverflow`] if there are more
/// than `cap`.
pub fn enumerate_lattice(sys: &FlowSystem, cap: u64) -> Result<Vec<FlowMatrix>> {
    let mut out = Vec::new();
    let mut overflow = false;
    for_each_lattice_point(sys, |cells| {
        if out.len() as u64 >= cap {
            overflow = true;
            return false;
        }
        out.push(FlowMatrix::from_cells(sys.k(), sys.l(), cells.to_vec()));
        true
    });
    if overflow {
        Err(Error::EnumerationOverflow { cap })
    } else {
        Ok(out)
    }
}

/// Number of lattice points, or [`Error::EnumerationOverflow`] once the walk
/// passes `cap`.
pub fn count_lattice(sys: &FlowSystem, cap: u64) -> Result<u64> {
    let mut seen = 0u64;
    let count = for_each_lattice_point(sys, |_| {
        seen += 1;
        seen <= cap
    });
    if count > cap {
        Err(Error::EnumerationOverflow { cap })
    } else {
        Ok(count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    fn sys(a: &[u64], b: &[u64]) -> FlowSystem {
        FlowSystem::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_lattice(&sys(&[5], &[5]), 10).unwrap(), 1);
        let pts = enumerate_lattice(&sys(&[2, 2], &[2, 2]), 10).unwrap();
        let want: Vec<Vec<u64>> = vec![vec![0, 2, 2, 0], vec![1, 1, 1, 1], vec![2, 0, 0, 2]];
        assert_eq!(pts.iter().map(|p| p.cells().to_vec()).collect::<Vec<_>>(), want);
        assert_eq!(count_lattice(&sys(&[10, 8, 6], &[12, 10, 2]), 1000).unwrap(), 279);
    }

    #[test]
    fn overflow_is_reported() {
        let s = sys(&[10, 8, 6], &[12, 10, 2]);
        assert!(matches!(count_lattice(&s, 278), Err(Error::EnumerationOverflow { cap: 278 })));
        assert!(matches!(enumerate_lattice(&s, 100), Err(Error::EnumerationOverflow { cap: 100 })));
    }

    /// Brute force over all cell vectors with entries bounded by the sizes.
    fn brute(a: &[u64], b: &[u64]) -> u64 {
        let (k, l) = (a.len(), b.len());
        let bound = |c: usize| a[c / l].min(b[c % l]);
        let mut cells = vec![0u64; k * l];
        let mut count = 0;
        loop {
            let ok = (0..k).all(|i| cells[i * l..(i + 1) * l].iter().sum::<u64>() == a[i])
                && (0..l).all(|j| (0..k).map(|i| cells[i * l + j]).sum::<u64>() == b[j]);
            count += u64::from(ok);
            let mut c = 0;
            loop {
                if c == cells.len() {
                    return count;
                }
                if cells[c] < bound(c) {
                    cells[c] += 1;
                    break;
                }
                cells[c] = 0;
                c += 1;
            }
        }
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = seeded_rng(9);
        for _ in 0..150 {
            let k = rng.random_range(1..4);
            let l = rng.random_range(1..4);
            let n = rng.random_range(k.max(l)..8) as u64;
            let split = |parts: usize, rng: &mut crate::Rng| {
                let mut v = vec![1u64; parts];
                for _ in 0..(n - parts as u64) {
                    v[rng.random_range(0..parts)] += 1;
                }
                v
            };
            let a = split(k, &mut rng);
            let b = split(l, &mut rng);
            let s = sys(&a, &b);
            let pts = enumerate_lattice(&s, u64::MAX).unwrap();
            assert_eq!(pts.len() as u64, brute(&a, &b), "{a:?} -> {b:?}");
            assert!(pts.iter().all(|p| s.is_feasible(p)));
            assert!(pts.windows(2).all(|w| w[0].cells() < w[1].cells()));
        }
    }
}
