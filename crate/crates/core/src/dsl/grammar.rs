//! Gear-train grammar as a deterministic automaton over tokens.
//!
//! Production rules:
//!
//! ```text
//! start -> Translate Shaft | Rack Mesh Spur
//! Shaft -> Gear Mesh Gear | Spur Mesh Rack | end
//! Spur  -> Mesh Spur | Translate Shaft | end
//! Rack  -> end
//! Gear  -> Translate Shaft | end
//! ```
//!
//! `Gear` is any rotating gear (spur, bevel, miter, worm, worm wheel, hypoid
//! pinion or ring). A gear reached through a mesh continues with the `Spur`
//! rule when it is a spur gear and with the `Gear` rule otherwise. Every
//! mesh must join catalogue mesh partners, and the total number of
//! components is bounded.

use std::fmt;

use thiserror::Error;

use crate::catalogue::{Catalogue, ComponentType, PartId};
use crate::dsl::token::{GearSequence, Token};

pub const MAX_COMPONENTS: usize = 10;

/// Upper bound on tokens for [`MAX_COMPONENTS`] components.
pub const MAX_TOKENS: usize = 2 * MAX_COMPONENTS + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum State {
    /// Only `<start>` may come next.
    Empty,
    /// After `<start>`.
    Begin,
    /// After a translate token.
    ExpectShaft,
    /// A shaft has just been placed.
    AfterShaft,
    /// A gear mounted on a shaft, waiting for its mesh.
    Mounted(PartId),
    /// A rack at the head of the sequence, waiting for its mesh.
    RackHead(PartId),
    /// After a mesh token; the next part must partner `from`.
    Partner { from: PartId, spur_only: bool },
    SpurTail(PartId),
    GearTail,
    RackTail,
    Done,
}

impl State {
    /// Fewest further components needed to reach `<end>`.
    fn min_to_finish(self) -> usize {
        match self {
            State::Empty | State::Begin | State::ExpectShaft => 1,
            State::Mounted(_) | State::RackHead(_) | State::Partner { .. } => 1,
            State::AfterShaft | State::SpurTail(_) | State::GearTail | State::RackTail | State::Done => 0,
        }
    }
}

/// What the grammar expected at a violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Start,
    End,
    Translate,
    Mesh,
    Shaft,
    Rack,
    Spur,
    Gear,
    PartnerOf(PartId),
    SpurPartnerOf(PartId),
    Nothing,
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expect::Start => f.write_str("<start>"),
            Expect::End => f.write_str("<end>"),
            Expect::Translate => f.write_str("translate"),
            Expect::Mesh => f.write_str("mesh"),
            Expect::Shaft => f.write_str("shaft"),
            Expect::Rack => f.write_str("rack"),
            Expect::Spur => f.write_str("spur gear"),
            Expect::Gear => f.write_str("gear"),
            Expect::PartnerOf(p) => write!(f, "mesh partner of {p}"),
            Expect::SpurPartnerOf(p) => write!(f, "spur partner of {p}"),
            Expect::Nothing => f.write_str("nothing"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct GrammarViolation {
    pub position: usize,
    pub expected: Vec<Expect>,
    /// `None` when the sequence ended early.
    pub found: Option<Token>,
}

impl fmt::Display for GrammarViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let expected: Vec<String> = self.expected.iter().map(|e| e.to_string()).collect();
        write!(f, "position {}: expected {{{}}}, found ", self.position, expected.join(", "))?;
        match self.found {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("end of sequence"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PrefixError {
    #[error("prefix cannot be extended to a valid sequence: {0}")]
    DeadEnd(GrammarViolation),
    #[error("prefix is already a complete sequence")]
    Complete,
}

/// Parser position: automaton state plus components used so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cursor {
    pub state: State,
    pub components: usize,
}

/// The grammar bound to a catalogue and a component limit.
#[derive(Clone, Copy, Debug)]
pub struct Grammar<'c> {
    cat: &'c Catalogue,
    max_components: usize,
}

impl<'c> Grammar<'c> {
    pub fn new(cat: &'c Catalogue) -> Self {
        Grammar { cat, max_components: MAX_COMPONENTS }
    }

    pub fn with_max_components(cat: &'c Catalogue, max_components: usize) -> Self {
        assert!(
            (1..=MAX_COMPONENTS).contains(&max_components),
            "max_components must be in 1..={MAX_COMPONENTS}"
        );
        Grammar { cat, max_components }
    }

    pub fn catalogue(&self) -> &'c Catalogue {
        self.cat
    }

    pub fn max_components(&self) -> usize {
        self.max_components
    }

    pub fn initial(&self) -> Cursor {
        Cursor { state: State::Empty, components: 0 }
    }

    /// Structural transition, ignoring the component budget.
    fn transition(&self, state: State, token: Token) -> Option<State> {
        let ty = |p: PartId| self.cat.component_type(p);
        let tail = |p: PartId| match ty(p) {
            ComponentType::Rack => State::RackTail,
            ComponentType::SpurGear => State::SpurTail(p),
            _ => State::GearTail,
        };
        match (state, token) {
            (State::Empty, Token::Start) => Some(State::Begin),
            (State::Begin, Token::Tra(_)) => Some(State::ExpectShaft),
            (State::Begin, Token::Part(p)) if ty(p) == ComponentType::Rack => Some(State::RackHead(p)),
            (State::ExpectShaft, Token::Part(p)) if ty(p) == ComponentType::Shaft => Some(State::AfterShaft),
            (State::AfterShaft, Token::Part(p)) if ty(p).is_rotary_gear() => Some(State::Mounted(p)),
            (State::Mounted(g), Token::Mesh(..)) => Some(State::Partner { from: g, spur_only: false }),
            (State::RackHead(r), Token::Mesh(..)) => Some(State::Partner { from: r, spur_only: true }),
            (State::SpurTail(s), Token::Mesh(..)) => Some(State::Partner { from: s, spur_only: true }),
            (State::Partner { from, spur_only }, Token::Part(p)) => {
                let ok = self.cat.mesh_compatible(from, p)
                    && (!spur_only || ty(p) == ComponentType::SpurGear);
                ok.then(|| tail(p))
            }
            (State::SpurTail(_) | State::GearTail, Token::Tra(_)) => Some(State::ExpectShaft),
            (
                State::AfterShaft | State::SpurTail(_) | State::GearTail | State::RackTail,
                Token::End,
            ) => Some(State::Done),
            _ => None,
        }
    }

    /// Advances the cursor by one token, honouring the component budget so
    /// that every reachable cursor can still be completed.
    pub fn step(&self, cur: Cursor, token: Token) -> Option<Cursor> {
        let state = self.transition(cur.state, token)?;
        let components = cur.components + usize::from(token.is_part());
        (components + state.min_to_finish() <= self.max_components).then_some(Cursor { state, components })
    }

    fn expected(&self, state: State) -> Vec<Expect> {
        match state {
            State::Empty => vec![Expect::Start],
            State::Begin => vec![Expect::Translate, Expect::Rack],
            State::ExpectShaft => vec![Expect::Shaft],
            State::AfterShaft => vec![Expect::Gear, Expect::End],
            State::Mounted(_) | State::RackHead(_) => vec![Expect::Mesh],
            State::Partner { from, spur_only: false } => vec![Expect::PartnerOf(from)],
            State::Partner { from, spur_only: true } => vec![Expect::SpurPartnerOf(from)],
            State::SpurTail(_) => vec![Expect::Mesh, Expect::Translate, Expect::End],
            State::GearTail => vec![Expect::Translate, Expect::End],
            State::RackTail => vec![Expect::End],
            State::Done => vec![Expect::Nothing],
        }
    }

    /// Allowed successors of a cursor, in vocabulary-id order.
    pub fn successors(&self, cur: Cursor) -> Vec<Token> {
        self.candidates(cur.state)
            .filter(|&t| self.step(cur, t).is_some())
            .collect()
    }

    fn candidates(&self, state: State) -> Box<dyn Iterator<Item = Token> + '_> {
        let parts = move || PartId::all().map(Token::Part);
        match state {
            State::Empty => Box::new(std::iter::once(Token::Start)),
            State::Done => Box::new(std::iter::empty()),
            State::Mounted(_) | State::RackHead(_) => {
                Box::new(Token::interfaces().into_iter().filter(|t| matches!(t, Token::Mesh(..))))
            }
            State::Partner { from, .. } => {
                Box::new(self.cat.part(from).mesh_partners.iter().map(|&p| Token::Part(p)).collect::<Vec<_>>().into_iter())
            }
            _ => Box::new(
                std::iter::once(Token::End)
                    .chain(Token::interfaces())
                    .chain(parts()),
            ),
        }
    }

    /// Runs a token list through the automaton, returning the final cursor or
    /// the first violation.
    pub fn parse_prefix(&self, tokens: &[Token]) -> Result<Cursor, GrammarViolation> {
        let mut cur = self.initial();
        for (position, &t) in tokens.iter().enumerate() {
            cur = self.step(cur, t).ok_or_else(|| GrammarViolation {
                position,
                expected: self.expected(cur.state),
                found: Some(t),
            })?;
        }
        Ok(cur)
    }

    /// `Ok` iff the sequence is a complete derivation (g_grammar = 0).
    pub fn validate(&self, seq: &GearSequence) -> Result<(), GrammarViolation> {
        let cur = self.parse_prefix(&seq.tokens)?;
        if cur.state == State::Done {
            Ok(())
        } else {
            Err(GrammarViolation {
                position: seq.tokens.len(),
                expected: self.expected(cur.state),
                found: None,
            })
        }
    }

    /// Tokens `t` such that `prefix + t` is a prefix of some valid sequence.
    pub fn next_tokens(&self, prefix: &[Token]) -> Result<Vec<Token>, PrefixError> {
        let cur = self.parse_prefix(prefix).map_err(PrefixError::DeadEnd)?;
        if cur.state == State::Done {
            return Err(PrefixError::Complete);
        }
        Ok(self.successors(cur))
    }
}

/// Validates against the default ten-component grammar.
pub fn validate_grammar(seq: &GearSequence, cat: &Catalogue) -> Result<(), GrammarViolation> {
    Grammar::new(cat).validate(seq)
}

/// Allowed next tokens under the default ten-component grammar.
pub fn next_tokens(prefix: &[Token], cat: &Catalogue) -> Result<Vec<Token>, PrefixError> {
    Grammar::new(cat).next_tokens(prefix)
}
