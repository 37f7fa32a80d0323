//! Labeled partial orders: bags of tuples with order uncertainty, closed
//! under a positive relational algebra, whose possible worlds are their
//! linear extensions.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Most elements whose linear extensions are listed by default.
pub const DEFAULT_LIST_CAP: usize = 10;
/// Most elements whose linear extensions are counted by default.
pub const DEFAULT_COUNT_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PorderError {
    #[error("element {0} does not exist")]
    BadElement(usize),
    #[error("order constraints contain a cycle")]
    Cycle,
    #[error("element {element} has {got} label columns, expected {expected}")]
    LabelArity {
        element: usize,
        expected: usize,
        got: usize,
    },
    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("column {col} out of range for arity {arity}")]
    BadColumn { col: usize, arity: usize },
    #[error("{n} elements exceed the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("sequence has {got} tuples for {expected} elements")]
    LengthMismatch { expected: usize, got: usize },
}

/// Elements `0..n` labeled by tuples of a fixed arity, with a strict partial
/// order stored as its transitive reduction (sorted covering pairs).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledPoset {
    arity: usize,
    labels: Vec<Vec<String>>,
    covers: Vec<(usize, usize)>,
    /// `less[a][b]` iff `a < b`.
    less: Vec<Vec<bool>>,
}

impl LabeledPoset {
    /// Builds the poset generated by `edges` (pairs `less, greater`).
    pub fn new(
        arity: usize,
        labels: Vec<Vec<String>>,
        edges: &[(usize, usize)],
    ) -> Result<Self, PorderError> {
        let n = labels.len();
        for (i, l) in labels.iter().enumerate() {
            if l.len() != arity {
                return Err(PorderError::LabelArity {
                    element: i,
                    expected: arity,
                    got: l.len(),
                });
            }
        }
        let mut less = alloc::vec![alloc::vec![false; n]; n];
        for &(a, b) in edges {
            if a >= n {
                return Err(PorderError::BadElement(a));
            }
            if b >= n {
                return Err(PorderError::BadElement(b));
            }
            less[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if less[i][k] {
                    for j in 0..n {
                        if less[k][j] {
                            less[i][j] = true;
                        }
                    }
                }
            }
        }
        if (0..n).any(|i| less[i][i]) {
            return Err(PorderError::Cycle);
        }
        Ok(Self::from_closure(arity, labels, less))
    }

    fn from_closure(arity: usize, labels: Vec<Vec<String>>, less: Vec<Vec<bool>>) -> Self {
        let n = labels.len();
        let mut covers = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if less[a][b] && !(0..n).any(|c| less[a][c] && less[c][b]) {
                    covers.push((a, b));
                }
            }
        }
        LabeledPoset {
            arity,
            labels,
            covers,
            less,
        }
    }

    /// Totally ordered elements with the given labels.
    pub fn chain(arity: usize, labels: Vec<Vec<String>>) -> Result<Self, PorderError> {
        let edges: Vec<(usize, usize)> = (1..labels.len()).map(|i| (i - 1, i)).collect();
        Self::new(arity, labels, &edges)
    }

    /// Pairwise incomparable elements with the given labels.
    pub fn antichain(arity: usize, labels: Vec<Vec<String>>) -> Result<Self, PorderError> {
        Self::new(arity, labels, &[])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn label(&self, e: usize) -> &[String] {
        &self.labels[e]
    }

    /// Covering pairs `(a, b)`: `a < b` with nothing in between.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn less(&self, a: usize, b: usize) -> bool {
        self.less[a][b]
    }

    /// Parallel composition: disjoint union, right elements renumbered after
    /// the left ones, no order across.
    pub fn union(&self, other: &Self) -> Result<Self, PorderError> {
        if self.arity != other.arity {
            return Err(PorderError::ArityMismatch {
                left: self.arity,
                right: other.arity,
            });
        }
        let (n, m) = (self.len(), other.len());
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let mut less = alloc::vec![alloc::vec![false; n + m]; n + m];
        for a in 0..n {
            less[a][..n].copy_from_slice(&self.less[a]);
        }
        for a in 0..m {
            less[n + a][n..].copy_from_slice(&other.less[a]);
        }
        Ok(Self::from_closure(self.arity, labels, less))
    }

    /// Pairs `(a, b)` numbered `a * other.len() + b`, labels concatenated,
    /// ordered coordinatewise.
    pub fn product(&self, other: &Self) -> Self {
        let (n, m) = (self.len(), other.len());
        let mut labels = Vec::with_capacity(n * m);
        for a in 0..n {
            for b in 0..m {
                let mut l = self.labels[a].clone();
                l.extend(other.labels[b].iter().cloned());
                labels.push(l);
            }
        }
        let le = |x: &Self, i: usize, j: usize| i == j || x.less[i][j];
        let mut less = alloc::vec![alloc::vec![false; n * m]; n * m];
        for a in 0..n {
            for b in 0..m {
                for a2 in 0..n {
                    for b2 in 0..m {
                        let (p, q) = (a * m + b, a2 * m + b2);
                        less[p][q] = p != q && le(self, a, a2) && le(other, b, b2);
                    }
                }
            }
        }
        Self::from_closure(self.arity + other.arity, labels, less)
    }

    /// Induced suborder on the elements whose label satisfies `keep`,
    /// renumbered in increasing order. Also returns the kept original ids.
    pub fn select(&self, keep: impl Fn(&[String]) -> bool) -> (Self, Vec<usize>) {
        let kept: Vec<usize> = (0..self.len()).filter(|&e| keep(&self.labels[e])).collect();
        let labels = kept.iter().map(|&e| self.labels[e].clone()).collect();
        let less = kept
            .iter()
            .map(|&a| kept.iter().map(|&b| self.less[a][b]).collect())
            .collect();
        (Self::from_closure(self.arity, labels, less), kept)
    }

    /// Relabels every element by the given columns; order and duplicates
    /// are kept.
    pub fn project(&self, cols: &[usize]) -> Result<Self, PorderError> {
        if let Some(&col) = cols.iter().find(|&&c| c >= self.arity) {
            return Err(PorderError::BadColumn {
                col,
                arity: self.arity,
            });
        }
        let labels = self
            .labels
            .iter()
            .map(|l| cols.iter().map(|&c| l[c].clone()).collect())
            .collect();
        Ok(LabeledPoset {
            arity: cols.len(),
            labels,
            covers: self.covers.clone(),
            less: self.less.clone(),
        })
    }

    fn predecessors(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&p| self.less[p][e])
    }

    /// All linear extensions as element sequences, in lexicographic order.
    pub fn linear_extension_orders(&self, cap: usize) -> Result<Vec<Vec<usize>>, PorderError> {
        let n = self.len();
        if n > cap {
            return Err(PorderError::TooLarge { n, cap });
        }
        fn go(
            p: &LabeledPoset,
            used: &mut Vec<bool>,
            seq: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if seq.len() == p.len() {
                out.push(seq.clone());
                return;
            }
            for e in 0..p.len() {
                if !used[e] && p.predecessors(e).all(|q| used[q]) {
                    used[e] = true;
                    seq.push(e);
                    go(p, used, seq, out);
                    seq.pop();
                    used[e] = false;
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut alloc::vec![false; n], &mut Vec::new(), &mut out);
        Ok(out)
    }

    /// Label sequences of all linear extensions (one per extension, so
    /// repeated when labels repeat).
    pub fn linear_extensions(&self, cap: usize) -> Result<Vec<Vec<Vec<String>>>, PorderError> {
        Ok(self
            .linear_extension_orders(cap)?
            .into_iter()
            .map(|order| order.into_iter().map(|e| self.labels[e].clone()).collect())
            .collect())
    }

    /// Number of linear extensions, by dynamic programming over down-sets
    /// (exponential in the worst case).
    pub fn count_linear_extensions(&self, cap: usize) -> Result<BigUint, PorderError> {
        let n = self.len();
        if n > cap || n >= 31 {
            return Err(PorderError::TooLarge {
                n,
                cap: cap.min(30),
            });
        }
        let preds: Vec<u32> = (0..n)
            .map(|e| self.predecessors(e).fold(0u32, |m, p| m | 1 << p))
            .collect();
        let mut ways: Vec<BigUint> = alloc::vec![BigUint::zero(); 1 << n];
        ways[0] = BigUint::one();
        for mask in 0usize..(1 << n) {
            if ways[mask].is_zero() {
                continue;
            }
            let w = ways[mask].clone();
            for e in 0..n {
                let bit = 1usize << e;
                if mask & bit == 0 && preds[e] as usize & !mask == 0 {
                    ways[mask | bit] += &w;
                }
            }
        }
        Ok(ways.pop().expect("at least one mask"))
    }

    /// Whether `seq` is the label sequence of some linear extension.
    pub fn is_possible_world(&self, seq: &[Vec<String>]) -> Result<bool, PorderError> {
        let n = self.len();
        if seq.len() != n {
            return Err(PorderError::LengthMismatch {
                expected: n,
                got: seq.len(),
            });
        }
        let distinct = self.labels.iter().collect::<BTreeSet<_>>().len() == n;
        if distinct {
            let mut position = alloc::vec![usize::MAX; n];
            for (i, l) in seq.iter().enumerate() {
                match self.labels.iter().position(|x| x == l) {
                    Some(e) if position[e] == usize::MAX => position[e] = i,
                    _ => return Ok(false),
                }
            }
            return Ok(self.covers.iter().all(|&(a, b)| position[a] < position[b]));
        }
        let mut failed: BTreeSet<Vec<bool>> = BTreeSet::new();
        Ok(self.match_from(seq, &mut alloc::vec![false; n], &mut failed))
    }

    fn match_from(
        &self,
        seq: &[Vec<String>],
        used: &mut Vec<bool>,
        failed: &mut BTreeSet<Vec<bool>>,
    ) -> bool {
        let i = used.iter().filter(|&&u| u).count();
        if i == seq.len() {
            return true;
        }
        if failed.contains(used) {
            return false;
        }
        for e in 0..self.len() {
            if !used[e] && self.labels[e] == seq[i] && self.predecessors(e).all(|p| used[p]) {
                used[e] = true;
                let ok = self.match_from(seq, used, failed);
                used[e] = false;
                if ok {
                    return true;
                }
            }
        }
        failed.insert(used.clone());
        false
    }
}
