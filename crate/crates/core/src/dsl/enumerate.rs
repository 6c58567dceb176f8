//! Exhaustive enumeration of variable sequences: derivations of the grammar
//! at component-type level, before any part token is chosen.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::catalogue::{Catalogue, ComponentType};
use crate::dsl::grammar::Grammar;
use crate::dsl::token::{GearSequence, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Start,
    End,
    Shaft,
    Rack,
    Spur,
    Bevel,
    Miter,
    Worm,
    Hypoid,
    Translate,
    Mesh,
}

impl Variable {
    /// Rotating gear types. Worm and hypoid pairs count as one type each.
    pub const GEARS: [Variable; 5] = [Variable::Spur, Variable::Bevel, Variable::Miter, Variable::Worm, Variable::Hypoid];

    pub fn is_component(self) -> bool {
        matches!(
            self,
            Variable::Shaft
                | Variable::Rack
                | Variable::Spur
                | Variable::Bevel
                | Variable::Miter
                | Variable::Worm
                | Variable::Hypoid
        )
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variable::Start => "<start>",
            Variable::End => "<end>",
            Variable::Shaft => "Shaft",
            Variable::Rack => "Rack",
            Variable::Spur => "Spur",
            Variable::Bevel => "Bevel",
            Variable::Miter => "Miter",
            Variable::Worm => "Worm",
            Variable::Hypoid => "Hypoid",
            Variable::Translate => "Translate",
            Variable::Mesh => "Mesh",
        };
        f.write_str(s)
    }
}

impl Variable {
    /// Variable a concrete token instantiates.
    pub fn of_token(token: Token, cat: &Catalogue) -> Variable {
        match token {
            Token::Start => Variable::Start,
            Token::End => Variable::End,
            Token::Tra(_) => Variable::Translate,
            Token::Mesh(..) => Variable::Mesh,
            Token::Part(id) => match cat.component_type(id) {
                ComponentType::Shaft => Variable::Shaft,
                ComponentType::Rack => Variable::Rack,
                ComponentType::SpurGear => Variable::Spur,
                ComponentType::BevelGear => Variable::Bevel,
                ComponentType::MiterGear => Variable::Miter,
                ComponentType::Worm | ComponentType::WormWheel => Variable::Worm,
                ComponentType::HypoidPinion | ComponentType::HypoidRing => Variable::Hypoid,
            },
        }
    }
}

pub type VariableSequence = Vec<Variable>;

/// Fills a variable sequence with tokens chosen uniformly among those the
/// grammar allows and the variable admits. `None` if the variable sequence
/// has no grammatical instantiation.
pub fn instantiate<R: Rng + ?Sized>(vars: &[Variable], cat: &Catalogue, rng: &mut R) -> Option<GearSequence> {
    let grammar = Grammar::new(cat);
    let mut cur = grammar.initial();
    let mut tokens = Vec::with_capacity(vars.len());
    for &v in vars {
        let options: Vec<Token> = grammar
            .successors(cur)
            .into_iter()
            .filter(|&t| Variable::of_token(t, cat) == v)
            .collect();
        let t = match options.as_slice() {
            [] => return None,
            [only] => *only,
            _ => *options.choose(rng)?,
        };
        cur = grammar.step(cur, t)?;
        tokens.push(t);
    }
    Some(GearSequence::new(tokens))
}

/// Variable sequences with at most `max_components` components. A mesh
/// joins two gears of the same type. The output is duplicate free because
/// each derivation yields a distinct string.
pub fn enumerate_variable_sequences(max_components: usize) -> Vec<VariableSequence> {
    let mut out = Vec::new();
    let mut buf = vec![Variable::Start];
    if max_components >= 1 {
        buf.extend([Variable::Translate, Variable::Shaft]);
        after_shaft(&mut buf, max_components - 1, &mut out);
        buf.truncate(1);
    }
    if max_components >= 2 {
        buf.extend([Variable::Rack, Variable::Mesh, Variable::Spur]);
        after_spur(&mut buf, max_components - 2, &mut out);
    }
    out
}

/// Two-stage sampler used for the random baseline: a variable sequence is
/// drawn uniformly from the enumeration, then filled with tokens.
#[derive(Clone, Debug)]
pub struct StructuredSampler {
    variables: Vec<VariableSequence>,
}

impl StructuredSampler {
    pub fn new(max_components: usize) -> Self {
        StructuredSampler { variables: enumerate_variable_sequences(max_components) }
    }

    pub fn variable_sequences(&self) -> &[VariableSequence] {
        &self.variables
    }

    pub fn sample<R: Rng + ?Sized>(&self, cat: &Catalogue, rng: &mut R) -> GearSequence {
        loop {
            let vars = self.variables.choose(rng).expect("enumeration is never empty");
            if let Some(seq) = instantiate(vars, cat, rng) {
                return seq;
            }
        }
    }
}

fn finish(buf: &mut VariableSequence, out: &mut Vec<VariableSequence>) {
    buf.push(Variable::End);
    out.push(buf.clone());
    buf.pop();
}

fn with<F: FnOnce(&mut VariableSequence)>(buf: &mut VariableSequence, vars: &[Variable], f: F) {
    let n = buf.len();
    buf.extend_from_slice(vars);
    f(buf);
    buf.truncate(n);
}

fn after_shaft(buf: &mut VariableSequence, budget: usize, out: &mut Vec<VariableSequence>) {
    finish(buf, out);
    if budget < 2 {
        return;
    }
    for g in Variable::GEARS {
        with(buf, &[g, Variable::Mesh, g], |b| {
            if g == Variable::Spur {
                after_spur(b, budget - 2, out)
            } else {
                after_gear(b, budget - 2, out)
            }
        });
    }
    with(buf, &[Variable::Spur, Variable::Mesh, Variable::Rack], |b| finish(b, out));
}

fn after_spur(buf: &mut VariableSequence, budget: usize, out: &mut Vec<VariableSequence>) {
    finish(buf, out);
    if budget >= 1 {
        with(buf, &[Variable::Mesh, Variable::Spur], |b| after_spur(b, budget - 1, out));
        with(buf, &[Variable::Translate, Variable::Shaft], |b| after_shaft(b, budget - 1, out));
    }
}

fn after_gear(buf: &mut VariableSequence, budget: usize, out: &mut Vec<VariableSequence>) {
    finish(buf, out);
    if budget >= 1 {
        with(buf, &[Variable::Translate, Variable::Shaft], |b| after_shaft(b, budget - 1, out));
    }
}
