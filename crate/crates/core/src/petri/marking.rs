use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::net::{PrTNet, Token};

/// Multiset of tokens per place. Empty places are never stored, so two
/// markings are equal exactly when their canonical keys are.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking {
    places: BTreeMap<String, BTreeMap<Token, u32>>,
}

/// Canonical, order-independent form of a [`Marking`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MarkingKey(pub Vec<(String, Vec<(Token, u32)>)>);

impl Marking {
    pub fn new() -> Marking {
        Marking::default()
    }

    /// The initial marking declared by `net`.
    pub fn initial(net: &PrTNet) -> Marking {
        let mut m = Marking::new();
        for (p, tok) in &net.init {
            m.add(p, tok.clone(), 1);
        }
        m
    }

    pub fn add(&mut self, place: &str, token: Token, n: u32) {
        if n == 0 {
            return;
        }
        *self
            .places
            .entry(place.to_string())
            .or_default()
            .entry(token)
            .or_default() += n;
    }

    /// Removes one copy of `token`; false if none was present.
    pub fn remove(&mut self, place: &str, token: &Token) -> bool {
        let Some(tokens) = self.places.get_mut(place) else {
            return false;
        };
        let Some(count) = tokens.get_mut(token) else {
            return false;
        };
        *count -= 1;
        if *count == 0 {
            tokens.remove(token);
            if tokens.is_empty() {
                self.places.remove(place);
            }
        }
        true
    }

    pub fn count(&self, place: &str, token: &Token) -> u32 {
        self.places.get(place).and_then(|t| t.get(token)).copied().unwrap_or(0)
    }

    pub fn place_total(&self, place: &str) -> u32 {
        self.places.get(place).map_or(0, |t| t.values().sum())
    }

    /// Distinct tokens in `place` with their multiplicities, sorted.
    pub fn tokens(&self, place: &str) -> impl Iterator<Item = (&Token, u32)> {
        self.places
            .get(place)
            .into_iter()
            .flat_map(|t| t.iter().map(|(k, v)| (k, *v)))
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }

    /// Non-empty places in id order.
    pub fn places(&self) -> impl Iterator<Item = &str> {
        self.places.keys().map(String::as_str)
    }

    pub fn canonical(&self) -> MarkingKey {
        MarkingKey(
            self.places
                .iter()
                .map(|(p, toks)| (p.clone(), toks.iter().map(|(t, n)| (t.clone(), *n)).collect()))
                .collect(),
        )
    }

    pub fn from_key(key: &MarkingKey) -> Marking {
        let mut m = Marking::new();
        for (p, toks) in &key.0 {
            for (t, n) in toks {
                m.add(p, t.clone(), *n);
            }
        }
        m
    }

    /// Place → token list (repeated per multiplicity).
    pub fn to_map(&self) -> BTreeMap<String, Vec<Token>> {
        self.places
            .iter()
            .map(|(p, toks)| {
                let list = toks
                    .iter()
                    .flat_map(|(t, n)| std::iter::repeat_n(t.clone(), *n as usize))
                    .collect();
                (p.clone(), list)
            })
            .collect()
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (p, toks)) in self.to_map().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}: ")?;
            for (j, t) in toks.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{t}")?;
            }
        }
        f.write_str("}")
    }
}

impl Serialize for Marking {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Marking {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, Vec<Token>>::deserialize(d)?;
        let mut m = Marking::new();
        for (p, toks) in map {
            for t in toks {
                m.add(&p, t, 1);
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Atom;

    fn tok(n: i64) -> Token {
        Token(vec![Atom::Int(n)])
    }

    #[test]
    fn multiset_order_is_irrelevant() {
        let mut a = Marking::new();
        a.add("p", tok(2), 1);
        a.add("p", tok(1), 1);
        let mut b = Marking::new();
        b.add("p", tok(1), 1);
        b.add("p", tok(2), 1);
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn empty_places_are_elided() {
        let mut b = Marking::new();
        b.add("p", tok(1), 1);
        assert!(b.remove("p", &tok(1)));
        assert_eq!(Marking::new().canonical(), b.canonical());
        assert!(!b.remove("p", &tok(1)));
    }

    #[test]
    fn insertion_order_across_places() {
        let mut a = Marking::new();
        a.add("q", tok(1), 1);
        a.add("p", Token::default(), 1);
        let mut b = Marking::new();
        b.add("p", Token::default(), 1);
        b.add("q", tok(1), 1);
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.to_string(), "{p: Default, q: (1)}");
    }

    #[test]
    fn key_round_trip() {
        let mut a = Marking::new();
        a.add("q", tok(1), 3);
        a.add("p", Token::default(), 1);
        assert_eq!(Marking::from_key(&a.canonical()), a);
    }
}
