//! Relational instances and their uncertain variants.
//!
//! A [`CInstance`] annotates facts with propositional formulas over Boolean
//! events; a [`PCInstance`] additionally gives each event an independent
//! probability; a [`TIDInstance`] attaches one independent probability to each
//! fact; a [`PCCInstance`] annotates facts with gates of a shared circuit.
//! Every valuation of the events selects a possible world: the facts whose
//! annotation holds.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::circuits::{Circuit, CircuitBuilder, Gate, GateId};
use crate::lexer::{tokenize, Cursor, Tok};
use crate::query::Query;
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error("duplicate relation `{0}` in schema")]
    DuplicateRelation(String),
    #[error("relation `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("fact {fact} has {got} arguments, relation expects {expected}")]
    ArityMismatch {
        fact: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate event `{0}`")]
    DuplicateEvent(String),
    #[error("event name `{0}` is reserved")]
    ReservedEvent(String),
    #[error("unknown event `{0}` in annotation")]
    UnknownEvent(String),
    #[error("probability {prob} of `{name}` is outside [0, 1]")]
    BadProbability { name: String, prob: f64 },
    #[error("duplicate fact {0} in tuple-independent instance")]
    DuplicateFact(String),
    #[error("valuation does not bind event `{0}`")]
    UnboundEvent(String),
    #[error("{events} events exceed the brute-force cap of {cap}")]
    TooManyEvents { events: usize, cap: usize },
    #[error("gate {0} is not a gate of the annotation circuit")]
    BadGate(GateId),
    #[error("circuit inputs do not match the event table")]
    EventMismatch,
    #[error("annotation syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("query does not match schema: {0}")]
    Query(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Schema {
    relations: Vec<Relation>,
}

impl Schema {
    pub fn new<S: Into<String>>(
        relations: impl IntoIterator<Item = (S, usize)>,
    ) -> Result<Self, InstanceError> {
        let mut out: Vec<Relation> = Vec::new();
        for (name, arity) in relations {
            let name = name.into();
            if arity == 0 {
                return Err(InstanceError::ZeroArity(name));
            }
            if out.iter().any(|r| r.name == name) {
                return Err(InstanceError::DuplicateRelation(name));
            }
            out.push(Relation { name, arity });
        }
        Ok(Schema { relations: out })
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.arity)
    }

    pub fn check(&self, fact: &Fact) -> Result<(), InstanceError> {
        let expected = self
            .arity(&fact.relation)
            .ok_or_else(|| InstanceError::UnknownRelation(fact.relation.clone()))?;
        if expected != fact.args.len() {
            return Err(InstanceError::ArityMismatch {
                fact: fact.to_string(),
                expected,
                got: fact.args.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub relation: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new<S: Into<String>>(relation: &str, args: impl IntoIterator<Item = S>) -> Self {
        Fact {
            relation: relation.to_string(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(a)?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub name: String,
    pub prob: f64,
}

impl Event {
    pub fn new(name: &str, prob: f64) -> Self {
        Event {
            name: name.to_string(),
            prob,
        }
    }
}

pub(crate) fn check_event_names<'a>(
    names: impl IntoIterator<Item = &'a str>,
) -> Result<(), InstanceError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if n == "T" || n == "F" {
            return Err(InstanceError::ReservedEvent(n.to_string()));
        }
        if !seen.insert(n) {
            return Err(InstanceError::DuplicateEvent(n.to_string()));
        }
    }
    Ok(())
}

pub(crate) fn check_prob(name: &str, prob: f64) -> Result<(), InstanceError> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(InstanceError::BadProbability {
            name: name.to_string(),
            prob,
        });
    }
    Ok(())
}

/// Propositional annotation over event names.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Annotation {
    True,
    False,
    Var(String),
    Not(Box<Annotation>),
    And(Box<Annotation>, Box<Annotation>),
    Or(Box<Annotation>, Box<Annotation>),
}

impl Annotation {
    pub fn var(name: &str) -> Self {
        Annotation::Var(name.to_string())
    }

    pub fn and(a: Annotation, b: Annotation) -> Self {
        Annotation::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Annotation, b: Annotation) -> Self {
        Annotation::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Annotation) -> Self {
        Annotation::Not(Box::new(a))
    }

    /// Parses `ann := lit | ann "&" ann | ann "|" ann | "(" ann ")"`,
    /// `lit := name | "!" name | "T" | "F"`; `&` binds tighter than `|`.
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let toks = tokenize(text).map_err(|(pos, msg)| InstanceError::Syntax { pos, msg })?;
        let mut cur = Cursor::new(toks, text.len());
        let ann = parse_or(&mut cur)?;
        if !cur.at_end() {
            return Err(InstanceError::Syntax {
                pos: cur.pos(),
                msg: "trailing input".to_string(),
            });
        }
        Ok(ann)
    }

    /// Evaluates under `lookup`, failing on the first unbound event.
    pub fn eval(
        &self,
        lookup: &mut impl FnMut(&str) -> Option<bool>,
    ) -> Result<bool, InstanceError> {
        Ok(match self {
            Annotation::True => true,
            Annotation::False => false,
            Annotation::Var(v) => {
                lookup(v).ok_or_else(|| InstanceError::UnboundEvent(v.clone()))?
            }
            Annotation::Not(a) => !a.eval(lookup)?,
            Annotation::And(a, b) => a.eval(lookup)? && b.eval(lookup)?,
            Annotation::Or(a, b) => a.eval(lookup)? || b.eval(lookup)?,
        })
    }

    pub fn events(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_events(&mut out);
        out
    }

    fn collect_events<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Annotation::Var(v) => {
                out.insert(v);
            }
            Annotation::Not(a) => a.collect_events(out),
            Annotation::And(a, b) | Annotation::Or(a, b) => {
                a.collect_events(out);
                b.collect_events(out);
            }
            Annotation::True | Annotation::False => {}
        }
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Annotation::True => f.write_str("T"),
            Annotation::False => f.write_str("F"),
            Annotation::Var(v) => f.write_str(v),
            Annotation::Not(a) => match **a {
                Annotation::Var(_) | Annotation::True | Annotation::False => write!(f, "!{a}"),
                _ => write!(f, "!({a})"),
            },
            Annotation::And(a, b) => write!(f, "({a} & {b})"),
            Annotation::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

fn parse_or(cur: &mut Cursor) -> Result<Annotation, InstanceError> {
    let mut lhs = parse_and(cur)?;
    while cur.eat(&Tok::Or) {
        let rhs = parse_and(cur)?;
        lhs = Annotation::or(lhs, rhs);
    }
    Ok(lhs)
}

fn parse_and(cur: &mut Cursor) -> Result<Annotation, InstanceError> {
    let mut lhs = parse_lit(cur)?;
    while cur.eat(&Tok::And) {
        let rhs = parse_lit(cur)?;
        lhs = Annotation::and(lhs, rhs);
    }
    Ok(lhs)
}

fn parse_lit(cur: &mut Cursor) -> Result<Annotation, InstanceError> {
    let pos = cur.pos();
    match cur.next() {
        Some(Tok::Not) => Ok(Annotation::not(parse_lit(cur)?)),
        Some(Tok::LParen) => {
            let inner = parse_or(cur)?;
            if !cur.eat(&Tok::RParen) {
                return Err(InstanceError::Syntax {
                    pos: cur.pos(),
                    msg: "expected `)`".to_string(),
                });
            }
            Ok(inner)
        }
        Some(Tok::Ident(name)) => Ok(match name.as_str() {
            "T" => Annotation::True,
            "F" => Annotation::False,
            _ => Annotation::Var(name),
        }),
        Some(tok) => Err(InstanceError::Syntax {
            pos,
            msg: alloc::format!("unexpected {}", tok.describe()),
        }),
        None => Err(InstanceError::Syntax {
            pos,
            msg: "unexpected end of input".to_string(),
        }),
    }
}

/// A total assignment of truth values to event names.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Valuation(BTreeMap<String, bool>);

impl Valuation {
    pub fn new() -> Self {
        Valuation(BTreeMap::new())
    }

    pub fn set(&mut self, event: &str, value: bool) {
        self.0.insert(event.to_string(), value);
    }

    pub fn get(&self, event: &str) -> Option<bool> {
        self.0.get(event).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Valuation over `events` given by aligned bits.
    pub fn from_bits<'a>(events: impl IntoIterator<Item = &'a str>, bits: &[bool]) -> Self {
        Valuation(
            events
                .into_iter()
                .zip(bits.iter())
                .map(|(e, b)| (e.to_string(), *b))
                .collect(),
        )
    }
}

impl<S: Into<String>> FromIterator<(S, bool)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (S, bool)>>(iter: I) -> Self {
        Valuation(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// A certain relational instance under set semantics.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Instance {
    facts: BTreeSet<Fact>,
}

impl Instance {
    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Self {
        Instance {
            facts: facts.into_iter().collect(),
        }
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

/// Merges duplicate facts, combining their annotations with `or`, keeping first-occurrence order.
fn merge_duplicates<A>(facts: Vec<(Fact, A)>, mut or: impl FnMut(A, A) -> A) -> Vec<(Fact, A)> {
    let mut index: BTreeMap<Fact, usize> = BTreeMap::new();
    let mut out: Vec<(Fact, Option<A>)> = Vec::new();
    for (fact, ann) in facts {
        match index.get(&fact) {
            Some(&i) => {
                let prev = out[i].1.take().expect("annotation present");
                out[i].1 = Some(or(prev, ann));
            }
            None => {
                index.insert(fact.clone(), out.len());
                out.push((fact, Some(ann)));
            }
        }
    }
    out.into_iter()
        .map(|(f, a)| (f, a.expect("annotation present")))
        .collect()
}

/// Facts annotated by propositional formulas over unvalued events.
#[derive(Clone, Debug, PartialEq)]
pub struct CInstance {
    schema: Schema,
    facts: Vec<(Fact, Annotation)>,
    events: Vec<String>,
}

impl CInstance {
    pub fn new(
        schema: Schema,
        facts: Vec<(Fact, Annotation)>,
        events: Vec<String>,
    ) -> Result<Self, InstanceError> {
        check_event_names(events.iter().map(String::as_str))?;
        let known: BTreeSet<&str> = events.iter().map(String::as_str).collect();
        for (fact, ann) in &facts {
            schema.check(fact)?;
            if let Some(e) = ann.events().into_iter().find(|e| !known.contains(e)) {
                return Err(InstanceError::UnknownEvent(e.to_string()));
            }
        }
        let facts = merge_duplicates(facts, Annotation::or);
        Ok(CInstance {
            schema,
            facts,
            events,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn facts(&self) -> &[(Fact, Annotation)] {
        &self.facts
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    /// The possible world selected by `v`: facts whose annotation holds.
    pub fn world_of(&self, v: &Valuation) -> Result<Instance, InstanceError> {
        if let Some(e) = self.events.iter().find(|e| v.get(e).is_none()) {
            return Err(InstanceError::UnboundEvent(e.clone()));
        }
        let mut out = BTreeSet::new();
        for (fact, ann) in &self.facts {
            if ann.eval(&mut |e| v.get(e))? {
                out.insert(fact.clone());
            }
        }
        Ok(Instance { facts: out })
    }
}

/// A c-instance whose events carry independent probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct PCInstance {
    base: CInstance,
    events: Vec<Event>,
}

impl PCInstance {
    pub fn new(
        schema: Schema,
        facts: Vec<(Fact, Annotation)>,
        events: Vec<Event>,
    ) -> Result<Self, InstanceError> {
        for e in &events {
            check_prob(&e.name, e.prob)?;
        }
        let base = CInstance::new(
            schema,
            facts,
            events.iter().map(|e| e.name.clone()).collect(),
        )?;
        Ok(PCInstance { base, events })
    }

    pub fn as_c_instance(&self) -> &CInstance {
        &self.base
    }

    pub fn schema(&self) -> &Schema {
        &self.base.schema
    }

    pub fn facts(&self) -> &[(Fact, Annotation)] {
        &self.base.facts
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn world_of(&self, v: &Valuation) -> Result<Instance, InstanceError> {
        self.base.world_of(v)
    }

    /// All `2^n` possible worlds with their probabilities.
    pub fn enumerate_worlds(&self, cap: usize) -> Result<Vec<World>, InstanceError> {
        enumerate_worlds(self, cap)
    }

    /// Compiles every annotation into gates of one shared circuit.
    ///
    /// Each event becomes a single input gate; connectives become binary
    /// `and`/`or` gates and unary `not` gates.
    pub fn to_pcc(&self) -> PCCInstance {
        let names: Vec<String> = self.events.iter().map(|e| e.name.clone()).collect();
        let mut b = CircuitBuilder::new(names.clone());
        let inputs: BTreeMap<&str, GateId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), b.input(i)))
            .collect();
        let mut consts: [Option<GateId>; 2] = [None, None];
        let facts = self
            .base
            .facts
            .iter()
            .map(|(fact, ann)| {
                let g = compile_annotation(ann, &mut b, &inputs, &mut consts);
                (fact.clone(), g)
            })
            .collect();
        PCCInstance {
            schema: self.base.schema.clone(),
            facts,
            circuit: b.finish(None),
            events: self.events.clone(),
        }
    }
}

fn compile_annotation(
    ann: &Annotation,
    b: &mut CircuitBuilder,
    inputs: &BTreeMap<&str, GateId>,
    consts: &mut [Option<GateId>; 2],
) -> GateId {
    match ann {
        Annotation::True | Annotation::False => {
            let value = matches!(ann, Annotation::True);
            *consts[value as usize].get_or_insert_with(|| b.constant(value))
        }
        Annotation::Var(v) => inputs[v.as_str()],
        Annotation::Not(a) => {
            let g = compile_annotation(a, b, inputs, consts);
            b.not(g)
        }
        Annotation::And(x, y) => {
            let gx = compile_annotation(x, b, inputs, consts);
            let gy = compile_annotation(y, b, inputs, consts);
            b.push(Gate::And(alloc::vec![gx, gy]))
        }
        Annotation::Or(x, y) => {
            let gx = compile_annotation(x, b, inputs, consts);
            let gy = compile_annotation(y, b, inputs, consts);
            b.push(Gate::Or(alloc::vec![gx, gy]))
        }
    }
}

/// Tuple-independent instance: each fact present independently.
#[derive(Clone, Debug, PartialEq)]
pub struct TIDInstance {
    schema: Schema,
    facts: Vec<(Fact, f64)>,
}

impl TIDInstance {
    pub fn new(schema: Schema, facts: Vec<(Fact, f64)>) -> Result<Self, InstanceError> {
        let mut seen = BTreeSet::new();
        for (fact, p) in &facts {
            schema.check(fact)?;
            check_prob(&fact.to_string(), *p)?;
            if !seen.insert(fact) {
                return Err(InstanceError::DuplicateFact(fact.to_string()));
            }
        }
        Ok(TIDInstance { schema, facts })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn facts(&self) -> &[(Fact, f64)] {
        &self.facts
    }

    /// One fresh event `e<i>` per fact, annotating that fact alone.
    pub fn to_pc(&self) -> PCInstance {
        let events: Vec<Event> = self
            .facts
            .iter()
            .enumerate()
            .map(|(i, (_, p))| Event {
                name: alloc::format!("e{i}"),
                prob: *p,
            })
            .collect();
        let facts = self
            .facts
            .iter()
            .zip(&events)
            .map(|((f, _), e)| (f.clone(), Annotation::Var(e.name.clone())))
            .collect();
        PCInstance {
            base: CInstance {
                schema: self.schema.clone(),
                facts,
                events: events.iter().map(|e| e.name.clone()).collect(),
            },
            events,
        }
    }
}

/// Facts annotated by gates of a shared circuit whose inputs are the events.
///
/// The circuit's `output` is not used; every gate a fact points to is an
/// annotation in its own right.
#[derive(Clone, Debug, PartialEq)]
pub struct PCCInstance {
    schema: Schema,
    facts: Vec<(Fact, GateId)>,
    circuit: Circuit,
    events: Vec<Event>,
}

impl PCCInstance {
    pub fn new(
        schema: Schema,
        facts: Vec<(Fact, GateId)>,
        circuit: Circuit,
        events: Vec<Event>,
    ) -> Result<Self, InstanceError> {
        for e in &events {
            check_prob(&e.name, e.prob)?;
        }
        check_event_names(events.iter().map(|e| e.name.as_str()))?;
        if circuit.events().len() != events.len()
            || circuit
                .events()
                .iter()
                .zip(&events)
                .any(|(a, b)| *a != b.name)
        {
            return Err(InstanceError::EventMismatch);
        }
        for (fact, g) in &facts {
            schema.check(fact)?;
            if *g >= circuit.len() {
                return Err(InstanceError::BadGate(*g));
            }
        }
        let mut b = CircuitBuilder::from_circuit(circuit);
        let facts = merge_duplicates(facts, |x, y| b.push(Gate::Or(alloc::vec![x, y])));
        Ok(PCCInstance {
            schema,
            facts,
            circuit: b.finish(None),
            events,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn facts(&self) -> &[(Fact, GateId)] {
        &self.facts
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn world_of(&self, v: &Valuation) -> Result<Instance, InstanceError> {
        let bits = self
            .events
            .iter()
            .map(|e| {
                v.get(&e.name)
                    .ok_or_else(|| InstanceError::UnboundEvent(e.name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.world_bits(&bits))
    }

    pub fn enumerate_worlds(&self, cap: usize) -> Result<Vec<World>, InstanceError> {
        enumerate_worlds(self, cap)
    }
}

impl From<&TIDInstance> for PCCInstance {
    fn from(tid: &TIDInstance) -> Self {
        tid.to_pc().to_pcc()
    }
}

impl From<&PCInstance> for PCCInstance {
    fn from(pc: &PCInstance) -> Self {
        pc.to_pcc()
    }
}

/// Common view of instances whose worlds are selected by independent events.
pub trait PossibleWorlds {
    fn schema(&self) -> &Schema;
    fn event_table(&self) -> &[Event];
    /// The world selected by `bits`, aligned with [`PossibleWorlds::event_table`].
    fn world_bits(&self, bits: &[bool]) -> Instance;
}

impl PossibleWorlds for PCInstance {
    fn schema(&self) -> &Schema {
        &self.base.schema
    }

    fn event_table(&self) -> &[Event] {
        &self.events
    }

    fn world_bits(&self, bits: &[bool]) -> Instance {
        let index: BTreeMap<&str, usize> = self
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.as_str(), i))
            .collect();
        let facts = self
            .base
            .facts
            .iter()
            .filter(|(_, ann)| {
                ann.eval(&mut |e| index.get(e).map(|&i| bits[i]))
                    .expect("annotation events are declared")
            })
            .map(|(f, _)| f.clone())
            .collect();
        Instance { facts }
    }
}

impl PossibleWorlds for PCCInstance {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn event_table(&self) -> &[Event] {
        &self.events
    }

    fn world_bits(&self, bits: &[bool]) -> Instance {
        let values = self.circuit.evaluate_all(bits);
        let facts = self
            .facts
            .iter()
            .filter(|(_, g)| values[*g])
            .map(|(f, _)| f.clone())
            .collect();
        Instance { facts }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub valuation: Valuation,
    pub instance: Instance,
    pub prob: f64,
}

/// Calls `f(bits, probability)` for each of the `2^n` valuations, in binary
/// counting order with event 0 as the least significant bit.
pub fn for_each_valuation<W: Weight>(
    events: &[Event],
    cap: usize,
    mut f: impl FnMut(&[bool], W),
) -> Result<(), InstanceError> {
    let n = events.len();
    if n > cap || n >= usize::BITS as usize {
        return Err(InstanceError::TooManyEvents { events: n, cap });
    }
    let probs: Vec<(W, W)> = events
        .iter()
        .map(|e| {
            let p = W::from_prob(e.prob);
            let q = p.complement();
            (p, q)
        })
        .collect();
    let mut bits = alloc::vec![false; n];
    for mask in 0..(1usize << n) {
        let mut w = W::one();
        for (i, bit) in bits.iter_mut().enumerate() {
            *bit = mask >> i & 1 == 1;
            w = w.mul(if *bit { &probs[i].0 } else { &probs[i].1 });
        }
        f(&bits, w);
    }
    Ok(())
}

pub fn enumerate_worlds<I: PossibleWorlds + ?Sized>(
    inst: &I,
    cap: usize,
) -> Result<Vec<World>, InstanceError> {
    let events = inst.event_table();
    let mut out = Vec::new();
    for_each_valuation::<f64>(events, cap, |bits, prob| {
        out.push(World {
            valuation: Valuation::from_bits(events.iter().map(|e| e.name.as_str()), bits),
            instance: inst.world_bits(bits),
            prob,
        });
    })?;
    Ok(out)
}

/// Sums the probabilities of the worlds satisfying `q`, evaluating `q`
/// directly on each world.
pub fn query_probability_bruteforce<I: PossibleWorlds + ?Sized>(
    inst: &I,
    q: &Query,
    cap: usize,
) -> Result<f64, InstanceError> {
    query_probability_bruteforce_in::<f64, I>(inst, q, cap)
}

pub fn query_probability_bruteforce_in<W: Weight, I: PossibleWorlds + ?Sized>(
    inst: &I,
    q: &Query,
    cap: usize,
) -> Result<W, InstanceError> {
    q.check(inst.schema())
        .map_err(|e| InstanceError::Query(e.to_string()))?;
    let mut total = W::zero();
    for_each_valuation::<W>(inst.event_table(), cap, |bits, w| {
        if q.holds(&inst.world_bits(bits)) {
            total = total.add(&w);
        }
    })?;
    Ok(total)
}
