//! Discrete normed abelian coefficient groups.
//!
//! Two families are supported: the integers `Z` and the cyclic groups `Z/q`.
//! Each carries a norm, either the standard one (`|g|` on `Z`,
//! `min(g, q - g)` on `Z/q`) or a uniform norm assigning the same positive
//! value to every nonzero element. All of them are discrete: the smallest
//! norm of a nonzero element is positive and attained.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Integers,
    ModQ(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormSpec {
    Standard,
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffGroup {
    kind: GroupKind,
    norm: NormSpec,
}

impl CoeffGroup {
    pub fn integers() -> Self {
        CoeffGroup { kind: GroupKind::Integers, norm: NormSpec::Standard }
    }

    pub fn mod_q(q: u64) -> Result<Self> {
        Self::new(GroupKind::ModQ(q), NormSpec::Standard)
    }

    pub fn z2() -> Self {
        CoeffGroup { kind: GroupKind::ModQ(2), norm: NormSpec::Standard }
    }

    pub fn new(kind: GroupKind, norm: NormSpec) -> Result<Self> {
        if let GroupKind::ModQ(q) = kind {
            if q < 2 {
                return Err(Error::InvalidGroup(format!("modulus must be >= 2, got {q}")));
            }
            if q > i32::MAX as u64 {
                return Err(Error::InvalidGroup(format!("modulus {q} too large")));
            }
        }
        if let NormSpec::Uniform(c) = norm {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidGroup(format!("uniform norm must be positive, got {c}")));
            }
        }
        Ok(CoeffGroup { kind, norm })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn norm_spec(&self) -> NormSpec {
        self.norm
    }

    /// The modulus for `Z/q`, `None` for `Z`.
    pub fn modulus(&self) -> Option<u64> {
        match self.kind {
            GroupKind::Integers => None,
            GroupKind::ModQ(q) => Some(q),
        }
    }

    pub fn is_prime_field(&self) -> bool {
        match self.kind {
            GroupKind::ModQ(q) => (2..).take_while(|p| p * p <= q).all(|p| q % p != 0),
            GroupKind::Integers => false,
        }
    }

    /// Canonical representative: residues `0..q` for `Z/q`.
    pub fn canon(&self, v: i64) -> i64 {
        match self.kind {
            GroupKind::Integers => v,
            GroupKind::ModQ(q) => v.rem_euclid(q as i64),
        }
    }

    pub fn add(&self, a: i64, b: i64) -> Result<i64> {
        match self.kind {
            GroupKind::Integers => a.checked_add(b).ok_or(Error::Overflow),
            GroupKind::ModQ(q) => Ok((a + b).rem_euclid(q as i64)),
        }
    }

    pub fn neg(&self, a: i64) -> i64 {
        self.canon(-a)
    }

    pub fn mul_int(&self, k: i64, a: i64) -> Result<i64> {
        match self.kind {
            GroupKind::Integers => k.checked_mul(a).ok_or(Error::Overflow),
            GroupKind::ModQ(q) => {
                let q = q as i128;
                Ok(((k as i128 * a as i128).rem_euclid(q)) as i64)
            }
        }
    }

    pub fn norm_of(&self, v: i64) -> f64 {
        let v = self.canon(v);
        if v == 0 {
            return 0.0;
        }
        match (self.norm, self.kind) {
            (NormSpec::Uniform(c), _) => c,
            (NormSpec::Standard, GroupKind::Integers) => v.unsigned_abs() as f64,
            (NormSpec::Standard, GroupKind::ModQ(q)) => {
                let v = v as u64;
                v.min(q - v) as f64
            }
        }
    }

    /// `inf { |g| : g != 0 }`, attained for every supported group.
    pub fn min_positive_norm(&self) -> f64 {
        match self.norm {
            NormSpec::Uniform(c) => c,
            NormSpec::Standard => 1.0,
        }
    }

    pub fn elem(&self, v: i64) -> GroupElem {
        GroupElem { group: *self, value: self.canon(v) }
    }

    pub fn zero(&self) -> GroupElem {
        self.elem(0)
    }

    /// Short name used on the command line: `Z`, `Z2`, `Z3`, ...
    pub fn short_name(&self) -> String {
        match self.kind {
            GroupKind::Integers => "Z".into(),
            GroupKind::ModQ(q) => format!("Z{q}"),
        }
    }

    /// Parses `Z`, `Z2`, `Z/3`, `Zq5`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("z") {
            return Ok(Self::integers());
        }
        let rest = t
            .strip_prefix("Z/")
            .or_else(|| t.strip_prefix("Zq"))
            .or_else(|| t.strip_prefix('Z'))
            .ok_or_else(|| Error::InvalidGroup(format!("unrecognized group '{s}'")))?;
        let q: u64 = rest
            .parse()
            .map_err(|_| Error::InvalidGroup(format!("unrecognized group '{s}'")))?;
        Self::mod_q(q)
    }
}

impl fmt::Display for CoeffGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.norm {
            NormSpec::Standard => write!(f, "{}", self.short_name()),
            NormSpec::Uniform(c) => write!(f, "{}[uniform {c}]", self.short_name()),
        }
    }
}

/// An element of a coefficient group, kept in canonical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElem {
    group: CoeffGroup,
    value: i64,
}

impl GroupElem {
    pub fn group(&self) -> &CoeffGroup {
        &self.group
    }

    pub fn value(&self) -> i64 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn add(&self, other: &GroupElem) -> Result<GroupElem> {
        if self.group != other.group {
            return Err(Error::GroupMismatch(self.group.to_string(), other.group.to_string()));
        }
        Ok(GroupElem { group: self.group, value: self.group.add(self.value, other.value)? })
    }

    pub fn neg(&self) -> GroupElem {
        GroupElem { group: self.group, value: self.group.neg(self.value) }
    }

    pub fn norm(&self) -> f64 {
        self.group.norm_of(self.value)
    }
}

impl fmt::Display for GroupElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in {}", self.value, self.group)
    }
}

/// JSON descriptor: `{"kind":"Z"}` or `{"kind":"Zq","q":3,"norm":"standard"}`;
/// a uniform norm is written `"norm":{"uniform":2.5}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupDescriptor {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormDescriptor>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NormDescriptor {
    Named(String),
    Uniform { uniform: f64 },
}

impl TryFrom<&GroupDescriptor> for CoeffGroup {
    type Error = Error;

    fn try_from(d: &GroupDescriptor) -> Result<Self> {
        let norm = match &d.norm {
            None => NormSpec::Standard,
            Some(NormDescriptor::Named(s)) if s == "standard" => NormSpec::Standard,
            Some(NormDescriptor::Named(s)) => {
                return Err(Error::InvalidGroup(format!("unknown norm '{s}'")))
            }
            Some(NormDescriptor::Uniform { uniform }) => NormSpec::Uniform(*uniform),
        };
        match d.kind.as_str() {
            "Z" => {
                if d.q.is_some() {
                    return Err(Error::InvalidGroup("kind Z takes no modulus".into()));
                }
                CoeffGroup::new(GroupKind::Integers, norm)
            }
            "Zq" => {
                let q = d.q.ok_or_else(|| Error::InvalidGroup("kind Zq requires q".into()))?;
                CoeffGroup::new(GroupKind::ModQ(q), norm)
            }
            other => Err(Error::InvalidGroup(format!("unknown group kind '{other}'"))),
        }
    }
}

impl From<&CoeffGroup> for GroupDescriptor {
    fn from(g: &CoeffGroup) -> Self {
        let norm = match g.norm {
            NormSpec::Standard => None,
            NormSpec::Uniform(c) => Some(NormDescriptor::Uniform { uniform: c }),
        };
        match g.kind {
            GroupKind::Integers => GroupDescriptor { kind: "Z".into(), q: None, norm },
            GroupKind::ModQ(q) => GroupDescriptor {
                kind: "Zq".into(),
                q: Some(q),
                norm: Some(norm.unwrap_or(NormDescriptor::Named("standard".into()))),
            },
        }
    }
}

impl Serialize for CoeffGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupDescriptor::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoeffGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = GroupDescriptor::deserialize(d)?;
        CoeffGroup::try_from(&desc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn addition_examples() {
        let z = CoeffGroup::integers();
        assert_eq!(z.elem(2).add(&z.elem(-2)).unwrap().value(), 0);
        assert_eq!(z.elem(5).add(&z.elem(7)).unwrap().value(), 12);
        let z3 = CoeffGroup::mod_q(3).unwrap();
        assert_eq!(z3.elem(2).add(&z3.elem(2)).unwrap().value(), 1);
    }

    #[test]
    fn mismatched_groups_are_rejected() {
        let a = CoeffGroup::integers().elem(1);
        let b = CoeffGroup::z2().elem(1);
        assert!(matches!(a.add(&b), Err(Error::GroupMismatch(..))));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(CoeffGroup::integers().elem(-3).norm(), 3.0);
        assert_eq!(CoeffGroup::mod_q(5).unwrap().elem(4).norm(), 1.0);
        let u = CoeffGroup::new(GroupKind::ModQ(4), NormSpec::Uniform(2.5)).unwrap();
        assert_eq!(u.elem(3).norm(), 2.5);
        assert_eq!(u.elem(0).norm(), 0.0);
    }

    #[test]
    fn min_positive_norm_examples() {
        assert_eq!(CoeffGroup::integers().min_positive_norm(), 1.0);
        assert_eq!(CoeffGroup::mod_q(6).unwrap().min_positive_norm(), 1.0);
        let u = CoeffGroup::new(GroupKind::ModQ(4), NormSpec::Uniform(2.5)).unwrap();
        assert_eq!(u.min_positive_norm(), 2.5);
    }

    #[test]
    fn modular_norm_axioms_exhaustive() {
        for q in 2..=12u64 {
            for norm in [NormSpec::Standard, NormSpec::Uniform(1.75)] {
                let g = CoeffGroup::new(GroupKind::ModQ(q), norm).unwrap();
                let a = g.min_positive_norm();
                for x in 0..q as i64 {
                    assert_eq!(g.norm_of(x), g.norm_of(g.neg(x)));
                    assert_eq!(g.norm_of(x) == 0.0, x == 0);
                    if x != 0 {
                        assert!(a <= g.norm_of(x));
                    }
                    for y in 0..q as i64 {
                        let s = g.add(x, y).unwrap();
                        assert!(g.norm_of(s) <= g.norm_of(x) + g.norm_of(y));
                    }
                }
            }
        }
    }

    #[test]
    fn integer_min_norm_sampled() {
        use rand::Rng;
        let g = CoeffGroup::integers();
        let mut rng = crate::rng::stream(11, &[]);
        for _ in 0..10_000 {
            let v: i64 = rng.gen_range(-1_000_000..=1_000_000);
            if v != 0 {
                assert!(g.min_positive_norm() <= g.norm_of(v));
            }
        }
    }

    proptest! {
        #[test]
        fn integer_norm_axioms(x in -1_000_000i64..1_000_000, y in -1_000_000i64..1_000_000) {
            let g = CoeffGroup::integers();
            prop_assert_eq!(g.norm_of(x), g.norm_of(-x));
            prop_assert!(g.norm_of(x + y) <= g.norm_of(x) + g.norm_of(y));
        }
    }

    #[test]
    fn descriptors_parse() {
        let g: CoeffGroup = serde_json::from_str(r#"{"kind":"Z"}"#).unwrap();
        assert_eq!(g, CoeffGroup::integers());
        let g: CoeffGroup = serde_json::from_str(r#"{"kind":"Zq","q":3,"norm":"standard"}"#).unwrap();
        assert_eq!(g, CoeffGroup::mod_q(3).unwrap());
        let g: CoeffGroup = serde_json::from_str(r#"{"kind":"Zq","q":4,"norm":{"uniform":2.5}}"#).unwrap();
        assert_eq!(g.norm_spec(), NormSpec::Uniform(2.5));
        assert!(serde_json::from_str::<CoeffGroup>(r#"{"kind":"Zq"}"#).is_err());
        assert!(serde_json::from_str::<CoeffGroup>(r#"{"kind":"Z","extra":1}"#).is_err());
        assert_eq!(CoeffGroup::parse_short("Z2").unwrap(), CoeffGroup::z2());
        assert_eq!(CoeffGroup::parse_short("Z").unwrap(), CoeffGroup::integers());
        assert!(CoeffGroup::parse_short("Q").is_err());
    }
}
