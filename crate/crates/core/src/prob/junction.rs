//! Junction-tree message passing on a circuit's gate variables.

use alloc::vec::Vec;

use crate::circuits::{Circuit, Gate, GateId};
use crate::treedec::{NodeId, Rooted, TreeDecomposition, Violation};
use crate::weight::Weight;

/// Largest bag the message passer accepts by default.
pub const DEFAULT_MAX_BAG: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MessageError {
    #[error("circuit decomposition is invalid: {0}")]
    Decomposition(#[from] Violation),
    #[error("a bag of {size} gates exceeds the cap of {cap}")]
    BagTooLarge { size: usize, cap: usize },
    #[error("circuit has no output gate")]
    MissingOutput,
    #[error("{got} probabilities given for {expected} events")]
    ProbabilityCount { expected: usize, got: usize },
    #[error("no bag holds gate {0} together with its inputs")]
    UncoveredGate(GateId),
}

/// Factor tables of a circuit laid out on a decomposition of its gate graph:
/// a Bernoulli factor per input gate and an indicator per other gate.
pub struct JunctionTree<'a, W> {
    circuit: &'a Circuit,
    probs: Vec<W>,
    bags: Vec<Vec<GateId>>,
    rooted: Rooted,
    /// Gates whose factor lives in each bag.
    assigned: Vec<Vec<GateId>>,
}

fn bit(index: usize, pos: usize) -> bool {
    index >> pos & 1 == 1
}

fn position(bag: &[GateId], g: GateId) -> usize {
    bag.binary_search(&g).expect("scope inside bag")
}

impl<'a, W: Weight> JunctionTree<'a, W> {
    /// `probs` gives the probability of each event of `circuit`, in order.
    pub fn new(
        circuit: &'a Circuit,
        probs: Vec<W>,
        t: &TreeDecomposition,
        max_bag: usize,
    ) -> Result<Self, MessageError> {
        if probs.len() != circuit.events().len() {
            return Err(MessageError::ProbabilityCount {
                expected: circuit.events().len(),
                got: probs.len(),
            });
        }
        t.validate(&circuit.gate_graph())?;
        let rooted = t.rooted()?;
        let bags: Vec<Vec<GateId>> = t
            .bags
            .iter()
            .map(|b| {
                let mut b = b.clone();
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        if let Some(b) = bags.iter().find(|b| b.len() > max_bag) {
            return Err(MessageError::BagTooLarge {
                size: b.len(),
                cap: max_bag,
            });
        }
        let mut holders: Vec<Vec<NodeId>> = alloc::vec![Vec::new(); circuit.len()];
        for (node, bag) in bags.iter().enumerate() {
            for &g in bag {
                holders[g].push(node);
            }
        }
        let mut assigned = alloc::vec![Vec::new(); bags.len()];
        for (g, gate) in circuit.gates().iter().enumerate() {
            let node = holders[g]
                .iter()
                .copied()
                .find(|&n| {
                    gate.inputs()
                        .iter()
                        .all(|x| bags[n].binary_search(x).is_ok())
                })
                .ok_or(MessageError::UncoveredGate(g))?;
            assigned[node].push(g);
        }
        Ok(JunctionTree {
            circuit,
            probs,
            bags,
            rooted,
            assigned,
        })
    }

    fn gate_factor(&self, g: GateId, value: &impl Fn(GateId) -> bool) -> W {
        let v = value(g);
        let ok = match self.circuit.gate(g) {
            Gate::Input(e) => {
                let p = &self.probs[*e];
                return if v { p.clone() } else { p.complement() };
            }
            Gate::Const(c) => v == *c,
            Gate::And(xs) => v == xs.iter().all(|&x| value(x)),
            Gate::Or(xs) => v == xs.iter().any(|&x| value(x)),
            Gate::Not(x) => v == !value(*x),
        };
        if ok {
            W::one()
        } else {
            W::zero()
        }
    }

    /// Product of the factors assigned to `node`, optionally with `pinned`
    /// forced true.
    fn potential(&self, node: NodeId, pinned: Option<GateId>) -> Vec<W> {
        let bag = &self.bags[node];
        let pin = pinned.and_then(|g| bag.binary_search(&g).ok());
        (0..1usize << bag.len())
            .map(|i| {
                if pin.is_some_and(|p| !bit(i, p)) {
                    return W::zero();
                }
                let value = |g: GateId| bit(i, position(bag, g));
                let mut w = W::one();
                for &g in &self.assigned[node] {
                    w = w.mul(&self.gate_factor(g, &value));
                    if w.is_zero() {
                        break;
                    }
                }
                w
            })
            .collect()
    }

    fn separator(&self, a: NodeId, b: NodeId) -> Vec<GateId> {
        self.bags[a]
            .iter()
            .copied()
            .filter(|g| self.bags[b].binary_search(g).is_ok())
            .collect()
    }

    /// Index of the separator assignment seen by bag entry `i`.
    fn project_index(bag: &[GateId], sep: &[GateId], i: usize) -> usize {
        sep.iter().enumerate().fold(0, |acc, (j, &g)| {
            acc | (bit(i, position(bag, g)) as usize) << j
        })
    }

    fn multiply(&self, node: NodeId, table: &mut [W], sep: &[GateId], msg: &[W]) {
        let bag = &self.bags[node];
        for (i, w) in table.iter_mut().enumerate() {
            if !w.is_zero() {
                *w = w.mul(&msg[Self::project_index(bag, sep, i)]);
            }
        }
    }

    fn marginalize(&self, node: NodeId, table: &[W], sep: &[GateId]) -> Vec<W> {
        let bag = &self.bags[node];
        let mut out = alloc::vec![W::zero(); 1usize << sep.len()];
        for (i, w) in table.iter().enumerate() {
            if !w.is_zero() {
                let j = Self::project_index(bag, sep, i);
                out[j] = out[j].add(w);
            }
        }
        out
    }

    /// Upward pass; returns each node's message to its parent and the root
    /// table.
    fn collect(&self, pinned: Option<GateId>) -> (Vec<Vec<W>>, Vec<W>) {
        let n = self.bags.len();
        let mut up: Vec<Vec<W>> = alloc::vec![Vec::new(); n];
        let mut root_table = Vec::new();
        for &node in &self.rooted.postorder {
            let mut table = self.potential(node, pinned);
            for &c in &self.rooted.children[node] {
                let sep = self.separator(c, node);
                self.multiply(node, &mut table, &sep, &up[c]);
            }
            match self.rooted.parent[node] {
                Some(p) => up[node] = self.marginalize(node, &table, &self.separator(node, p)),
                None => root_table = table,
            }
        }
        (up, root_table)
    }

    /// Probability that the output gate is true.
    pub fn probability(&self) -> Result<W, MessageError> {
        let out = self.circuit.output().ok_or(MessageError::MissingOutput)?;
        let (_, root) = self.collect(Some(out));
        Ok(root.iter().fold(W::zero(), |acc, w| acc.add(w)))
    }

    /// Probability that each gate is true, by a collect pass followed by a
    /// distribute pass.
    pub fn gate_marginals(&self) -> Vec<W> {
        let n = self.bags.len();
        let (up, _) = self.collect(None);
        let mut down: Vec<Vec<W>> = alloc::vec![Vec::new(); n];
        let mut result: Vec<Option<W>> = alloc::vec![None; self.circuit.len()];
        for &node in self.rooted.postorder.iter().rev() {
            let base = {
                let mut t = self.potential(node, None);
                if let Some(p) = self.rooted.parent[node] {
                    let sep = self.separator(node, p);
                    self.multiply(node, &mut t, &sep, &down[node]);
                }
                t
            };
            let kids = &self.rooted.children[node];
            let mut full = base.clone();
            for &c in kids {
                self.multiply(node, &mut full, &self.separator(c, node), &up[c]);
            }
            for (pos, &g) in self.bags[node].iter().enumerate() {
                if result[g].is_none() {
                    let mass = full
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| bit(*i, pos))
                        .fold(W::zero(), |acc, (_, w)| acc.add(w));
                    result[g] = Some(mass);
                }
            }
            for &c in kids {
                let mut t = base.clone();
                for &o in kids {
                    if o != c {
                        self.multiply(node, &mut t, &self.separator(o, node), &up[o]);
                    }
                }
                down[c] = self.marginalize(node, &t, &self.separator(c, node));
            }
        }
        result
            .into_iter()
            .map(|w| w.expect("every gate lies in some bag"))
            .collect()
    }
}

/// Probability that `circuit`'s output is true when event `i` is true with
/// probability `probs[i]`, by message passing over `t`.
pub fn circuit_probability<W: Weight>(
    circuit: &Circuit,
    probs: Vec<W>,
    t: &TreeDecomposition,
    max_bag: usize,
) -> Result<W, MessageError> {
    JunctionTree::new(circuit, probs, t, max_bag)?.probability()
}

/// Same quantity by summing over all valuations.
pub fn circuit_probability_bruteforce<W: Weight>(
    circuit: &Circuit,
    probs: &[W],
    cap: usize,
) -> Result<W, crate::instances::InstanceError> {
    let out = circuit.output();
    let n = probs.len();
    if n > cap || n >= usize::BITS as usize {
        return Err(crate::instances::InstanceError::TooManyEvents { events: n, cap });
    }
    let Some(out) = out else {
        return Ok(W::zero());
    };
    let mut total = W::zero();
    let mut bits = alloc::vec![false; n];
    for mask in 0..(1usize << n) {
        let mut w = W::one();
        for (i, b) in bits.iter_mut().enumerate() {
            *b = mask >> i & 1 == 1;
            w = w.mul(&if *b {
                probs[i].clone()
            } else {
                probs[i].complement()
            });
        }
        if circuit.evaluate_all(&bits)[out] {
            total = total.add(&w);
        }
    }
    Ok(total)
}
