//! Whitespace-separated text form of token streams, one sequence per line:
//! `<bos> A:C H:3 A:O E:1:1 A:C H:3 E:1:1 <eos>`.

use thiserror::Error;

use super::Token;
use crate::element::Element;
use crate::molgraph::BondOrder;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenTextError {
    #[error("empty token line")]
    Empty,
    #[error("unrecognized token `{0}`")]
    Unrecognized(String),
    #[error("bad payload in `{0}`")]
    BadPayload(String),
}

/// Parse one line of whitespace-separated tokens. Grammar validity is not
/// checked here; feed the result to `deserialize` or `TokenSeq::new`.
pub fn parse_token_line(line: &str) -> Result<Vec<Token>, TokenTextError> {
    let mut tokens = Vec::new();
    for word in line.split_whitespace() {
        tokens.push(parse_word(word)?);
    }
    if tokens.is_empty() {
        return Err(TokenTextError::Empty);
    }
    Ok(tokens)
}

fn parse_word(word: &str) -> Result<Token, TokenTextError> {
    match word {
        "<bos>" => return Ok(Token::Bos),
        "<eos>" => return Ok(Token::Eos),
        _ => {}
    }
    let (tag, payload) = word
        .split_once(':')
        .ok_or_else(|| TokenTextError::Unrecognized(word.to_string()))?;
    match tag {
        "A" => {
            let aromatic = payload.chars().next().is_some_and(|c| c.is_ascii_lowercase());
            let symbol = if aromatic {
                let mut s = payload.to_string();
                s.replace_range(..1, &payload[..1].to_ascii_uppercase());
                s
            } else {
                payload.to_string()
            };
            let element = Element::from_symbol(&symbol)
                .ok_or_else(|| TokenTextError::BadPayload(word.to_string()))?;
            if aromatic && !element.aromatic_allowed() {
                return Err(TokenTextError::BadPayload(word.to_string()));
            }
            Ok(Token::Atom { element, aromatic })
        }
        "C" => {
            let c: i8 = payload
                .parse()
                .map_err(|_| TokenTextError::BadPayload(word.to_string()))?;
            Ok(Token::Charge(c))
        }
        "H" => {
            let h: u8 = payload
                .parse()
                .map_err(|_| TokenTextError::BadPayload(word.to_string()))?;
            Ok(Token::HCount(h))
        }
        "E" => {
            let (gap, code) = payload
                .split_once(':')
                .ok_or_else(|| TokenTextError::BadPayload(word.to_string()))?;
            let gap: usize = gap
                .parse()
                .map_err(|_| TokenTextError::BadPayload(word.to_string()))?;
            let code: u8 = code
                .parse()
                .map_err(|_| TokenTextError::BadPayload(word.to_string()))?;
            let order = BondOrder::from_code(code)
                .ok_or_else(|| TokenTextError::BadPayload(word.to_string()))?;
            Ok(Token::Edge { gap, order })
        }
        _ => Err(TokenTextError::Unrecognized(word.to_string())),
    }
}
