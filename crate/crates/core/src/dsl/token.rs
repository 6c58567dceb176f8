use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalogue::{Catalogue, PartId, PART_NUMBERS};
use crate::geometry::Sign;

/// Which perpendicular a mesh token selects relative to the current motion axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeshAxis {
    First,
    Second,
}

impl MeshAxis {
    /// Cyclic index offset: the first perpendicular of `e_k` is `e_{k+1}`.
    pub fn step(self) -> u8 {
        match self {
            MeshAxis::First => 1,
            MeshAxis::Second => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Token {
    Start,
    End,
    Part(PartId),
    Tra(Sign),
    Mesh(MeshAxis, Sign),
}

/// Tokens the lexicon defines: start, end, six interfaces and the parts.
pub const LEXICON_SIZE: usize = 2 + 6 + PART_NUMBERS.len();

/// Model vocabulary: the lexicon plus one padding / end-of-sentence slot.
pub const VOCAB_SIZE: usize = LEXICON_SIZE + 1;

pub const PAD_TOKEN: &str = "<pad>";

const INTERFACES: [Token; 6] = [
    Token::Tra(Sign::Pos),
    Token::Tra(Sign::Neg),
    Token::Mesh(MeshAxis::First, Sign::Pos),
    Token::Mesh(MeshAxis::First, Sign::Neg),
    Token::Mesh(MeshAxis::Second, Sign::Pos),
    Token::Mesh(MeshAxis::Second, Sign::Neg),
];

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown token {0:?}")]
pub struct UnknownToken(pub String);

impl Token {
    /// Vocabulary id: start 0, end 1, interfaces 2..8, parts 8..52.
    pub fn id(self) -> usize {
        match self {
            Token::Start => 0,
            Token::End => 1,
            Token::Part(p) => 8 + p.index(),
            iface => 2 + INTERFACES.iter().position(|t| *t == iface).unwrap(),
        }
    }

    pub fn from_id(id: usize) -> Option<Token> {
        match id {
            0 => Some(Token::Start),
            1 => Some(Token::End),
            2..=7 => Some(INTERFACES[id - 2]),
            _ if id < LEXICON_SIZE => Some(Token::Part(PartId((id - 8) as u8))),
            _ => None,
        }
    }

    /// All lexicon tokens in id order.
    pub fn lexicon() -> impl Iterator<Item = Token> {
        (0..LEXICON_SIZE).map(|i| Token::from_id(i).unwrap())
    }

    pub fn interfaces() -> [Token; 6] {
        INTERFACES
    }

    pub fn part(self) -> Option<PartId> {
        match self {
            Token::Part(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_part(self) -> bool {
        matches!(self, Token::Part(_))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Token::Start => "<start>",
            Token::End => "<end>",
            Token::Part(p) => p.part_number(),
            Token::Tra(Sign::Pos) => "tra+",
            Token::Tra(Sign::Neg) => "tra-",
            Token::Mesh(MeshAxis::First, Sign::Pos) => "mesh_1p",
            Token::Mesh(MeshAxis::First, Sign::Neg) => "mesh_1n",
            Token::Mesh(MeshAxis::Second, Sign::Pos) => "mesh_2p",
            Token::Mesh(MeshAxis::Second, Sign::Neg) => "mesh_2n",
        };
        f.write_str(s)
    }
}

impl FromStr for Token {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Token, UnknownToken> {
        Ok(match s {
            "<start>" => Token::Start,
            "<end>" => Token::End,
            "tra+" => Token::Tra(Sign::Pos),
            "tra-" => Token::Tra(Sign::Neg),
            "mesh_1p" => Token::Mesh(MeshAxis::First, Sign::Pos),
            "mesh_1n" => Token::Mesh(MeshAxis::First, Sign::Neg),
            "mesh_2p" => Token::Mesh(MeshAxis::Second, Sign::Pos),
            "mesh_2n" => Token::Mesh(MeshAxis::Second, Sign::Neg),
            other => Token::Part(PartId::from_part_number(other).ok_or_else(|| UnknownToken(other.into()))?),
        })
    }
}

/// A candidate design: the full token list from `<start>` to `<end>`.
///
/// No validity is implied by construction; run the grammar validator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GearSequence {
    pub tokens: Vec<Token>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("token {position}: {source}")]
pub struct SequenceParseError {
    pub position: usize,
    pub source: UnknownToken,
}

impl GearSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        GearSequence { tokens }
    }

    /// Number of components (part tokens).
    pub fn component_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_part()).count()
    }

    pub fn parts(&self) -> impl Iterator<Item = PartId> + '_ {
        self.tokens.iter().filter_map(|t| t.part())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.tokens.last() == Some(&Token::End)
    }

    pub fn ids(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.id()).collect()
    }
}

impl From<Vec<Token>> for GearSequence {
    fn from(tokens: Vec<Token>) -> Self {
        GearSequence { tokens }
    }
}

impl fmt::Display for GearSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for GearSequence {
    type Err = SequenceParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens = s
            .split_whitespace()
            .enumerate()
            .map(|(position, w)| w.parse().map_err(|source| SequenceParseError { position, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GearSequence { tokens })
    }
}

/// Token-to-id vocabulary file: one token per line, line number = id.
pub fn vocabulary_text() -> String {
    let mut out = String::new();
    for t in Token::lexicon() {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out.push_str(PAD_TOKEN);
    out.push('\n');
    out
}

/// Hex SHA-256 of [`vocabulary_text`]; exchanged in the completer handshake.
pub fn vocabulary_hash() -> String {
    hex::encode(Sha256::digest(vocabulary_text().as_bytes()))
}

/// Component weight per vocabulary id; zero for interfaces, start, end and pad.
pub fn weight_coefficients(cat: &Catalogue) -> Vec<f64> {
    let mut w = vec![0.0; VOCAB_SIZE];
    for t in Token::lexicon() {
        if let Token::Part(p) = t {
            w[t.id()] = cat.part(p).weight_kg;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_a_bijection() {
        for (i, t) in Token::lexicon().enumerate() {
            assert_eq!(t.id(), i);
            assert_eq!(Token::from_id(i), Some(t));
            assert_eq!(t.to_string().parse::<Token>().unwrap(), t);
        }
        assert_eq!(LEXICON_SIZE, 52);
        assert_eq!(VOCAB_SIZE, 53);
        assert_eq!(Token::from_id(52), None);
    }

    #[test]
    fn interface_spelling() {
        let names: Vec<String> = Token::interfaces().iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["tra+", "tra-", "mesh_1p", "mesh_1n", "mesh_2p", "mesh_2n"]);
    }

    #[test]
    fn sequence_parse_and_print() {
        let text = "<start> MRGF2-500 mesh_2n MSGA2-40 tra- SH-200 SBSG2-3020R mesh_1p SBSG2-2030L <end>";
        let seq: GearSequence = text.parse().unwrap();
        assert_eq!(seq.len(), 10);
        assert_eq!(seq.component_count(), 5);
        assert_eq!(seq.to_string(), text);
        let err = "<start> tra+ SH-999 <end>".parse::<GearSequence>().unwrap_err();
        assert_eq!(err.position, 2);
    }

    #[test]
    fn vocabulary_file() {
        let text = vocabulary_text();
        assert_eq!(text.lines().count(), VOCAB_SIZE);
        assert_eq!(text.lines().next(), Some("<start>"));
        assert_eq!(text.lines().last(), Some(PAD_TOKEN));
        assert_eq!(vocabulary_hash().len(), 64);
    }

    #[test]
    fn weight_coefficients_follow_catalogue() {
        let cat = Catalogue::builtin();
        let w = weight_coefficients(&cat);
        assert_eq!(w.len(), VOCAB_SIZE);
        assert!(w[..8].iter().all(|&x| x == 0.0));
        assert_eq!(w[VOCAB_SIZE - 1], 0.0);
        let sh100 = Token::Part(PartId::from_part_number("SH-100").unwrap());
        assert_eq!(w[sh100.id()], crate::catalogue::shaft_weight(0.1).unwrap());
    }
}
