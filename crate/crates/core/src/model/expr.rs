use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SimParams;

/// Physical parameter a coupling or rate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Atom-cavity coupling `g`.
    G,
    /// Optical laser Rabi frequency `Omega`.
    Laser,
    /// Microwave Rabi frequency `omega`.
    Microwave,
    /// Atomic linewidth `gamma`.
    Gamma,
}

impl Symbol {
    pub fn name(self) -> &'static str {
        match self {
            Symbol::G => "g",
            Symbol::Laser => "Omega",
            Symbol::Microwave => "omega",
            Symbol::Gamma => "gamma",
        }
    }

    pub fn value(self, p: &SimParams) -> f64 {
        match self {
            Symbol::G => p.g,
            Symbol::Laser => p.rabi,
            Symbol::Microwave => p.microwave,
            Symbol::Gamma => p.gamma,
        }
    }
}

/// `[-][k*]symbol[/n]`, e.g. `Omega`, `-omega`, `gamma/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolExpr {
    pub symbol: Symbol,
    pub scale: f64,
    pub denom: u32,
}

impl SymbolExpr {
    pub const fn new(symbol: Symbol) -> Self {
        Self { symbol, scale: 1.0, denom: 1 }
    }

    pub const fn negated(symbol: Symbol) -> Self {
        Self { symbol, scale: -1.0, denom: 1 }
    }

    pub const fn fraction(symbol: Symbol, denom: u32) -> Self {
        Self { symbol, scale: 1.0, denom }
    }

    /// Multiplier applied to the symbol's value.
    pub fn factor(&self) -> f64 {
        self.scale / self.denom as f64
    }

    pub fn eval(&self, p: &SimParams) -> f64 {
        self.factor() * self.symbol.value(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as a symbol expression (expected e.g. `Omega`, `-omega`, `gamma/3`)")]
pub struct ParseExprError(pub String);

impl FromStr for SymbolExpr {
    type Err = ParseExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseExprError(s.to_string());
        let mut rest = s.trim();
        let mut scale = 1.0;
        if let Some(r) = rest.strip_prefix('-') {
            scale = -1.0;
            rest = r.trim_start();
        }
        if let Some((k, r)) = rest.split_once('*') {
            scale *= k.trim().parse::<f64>().map_err(|_| err())?;
            rest = r.trim();
        }
        let (name, denom) = match rest.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim().parse::<u32>().map_err(|_| err())?),
            None => (rest, 1),
        };
        if denom == 0 || !scale.is_finite() {
            return Err(err());
        }
        let symbol = match name {
            "g" => Symbol::G,
            "Omega" => Symbol::Laser,
            "omega" => Symbol::Microwave,
            "gamma" => Symbol::Gamma,
            _ => return Err(err()),
        };
        Ok(Self { symbol, scale, denom })
    }
}

impl fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == -1.0 {
            f.write_str("-")?;
        } else if self.scale != 1.0 {
            write!(f, "{}*", self.scale)?;
        }
        f.write_str(self.symbol.name())?;
        if self.denom != 1 {
            write!(f, "/{}", self.denom)?;
        }
        Ok(())
    }
}

impl Serialize for SymbolExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SymbolExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
