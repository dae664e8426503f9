//! Syntactic language bias: which sentences a learner may consider.

use std::fmt;

use crate::error::{Error, Result};
use crate::logic::{is_connected, is_core, Sentence};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageBias {
    pub min_len: usize,
    pub max_len: usize,
    pub max_vars: Option<usize>,
    pub connected: bool,
    pub variables_only: bool,
    pub require_core: bool,
}

impl Default for LanguageBias {
    fn default() -> Self {
        LanguageBias {
            min_len: 1,
            max_len: 3,
            max_vars: None,
            connected: true,
            variables_only: true,
            require_core: true,
        }
    }
}

impl LanguageBias {
    /// Connected, variable-only core conjunctions with `min..=max` atoms.
    pub fn lengths(min_len: usize, max_len: usize) -> Self {
        LanguageBias {
            min_len,
            max_len,
            ..LanguageBias::default()
        }
    }

    /// Accepts every sentence.
    pub fn unrestricted() -> Self {
        LanguageBias {
            min_len: 1,
            max_len: usize::MAX,
            max_vars: None,
            connected: false,
            variables_only: false,
            require_core: false,
        }
    }

    pub fn with_max_vars(mut self, max_vars: usize) -> Self {
        self.max_vars = Some(max_vars);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_len == 0 {
            return Err(Error::InvalidBias("min_len must be at least 1".into()));
        }
        if self.min_len > self.max_len {
            return Err(Error::InvalidBias(format!(
                "min_len {} exceeds max_len {}",
                self.min_len, self.max_len
            )));
        }
        if self.max_vars == Some(0) {
            return Err(Error::InvalidBias("max_vars must be at least 1".into()));
        }
        Ok(())
    }

    /// Membership test for a canonical sentence.
    pub fn conforms(&self, s: &Sentence) -> bool {
        let n = s.len();
        if n < self.min_len || n > self.max_len {
            return false;
        }
        if let Some(max) = self.max_vars {
            if s.variable_count() > max {
                return false;
            }
        }
        if self.variables_only && s.has_constants() {
            return false;
        }
        if self.connected && !is_connected(s) {
            return false;
        }
        if self.require_core && !is_core(s) {
            return false;
        }
        true
    }
}

/// Parses `key = value` lines. Keys: `min_len`, `max_len`, `max_vars`
/// (`none` to unset), `connected`, `variables_only`, `require_core`.
/// `#` and `%` start comments.
pub fn parse_bias(text: &str) -> Result<LanguageBias> {
    let mut bias = LanguageBias::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split(['#', '%']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::InvalidBias(format!("line {line}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| {
            Error::InvalidBias(format!("line {line}: {key} expects {what}, got `{value}`"))
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| bad("a non-negative integer"))
        };
        let flag = || match value {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(bad("true or false")),
        };
        match key {
            "min_len" => bias.min_len = count()?,
            "max_len" => bias.max_len = count()?,
            "max_vars" => {
                bias.max_vars = match value {
                    "none" | "unset" => None,
                    _ => Some(count()?),
                }
            }
            "connected" => bias.connected = flag()?,
            "variables_only" => bias.variables_only = flag()?,
            "require_core" => bias.require_core = flag()?,
            other => {
                return Err(Error::InvalidBias(format!(
                    "line {line}: unknown key `{other}`"
                )));
            }
        }
    }
    bias.validate()?;
    Ok(bias)
}

impl fmt::Display for LanguageBias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "min_len = {}", self.min_len)?;
        writeln!(f, "max_len = {}", self.max_len)?;
        match self.max_vars {
            Some(v) => writeln!(f, "max_vars = {v}")?,
            None => writeln!(f, "max_vars = none")?,
        }
        writeln!(f, "connected = {}", self.connected)?;
        writeln!(f, "variables_only = {}", self.variables_only)?;
        writeln!(f, "require_core = {}", self.require_core)
    }
}

impl LanguageBias {
    /// Single-line summary used in file headers.
    pub fn summary(&self) -> String {
        let vars = self
            .max_vars
            .map_or_else(|| "none".to_string(), |v| v.to_string());
        format!(
            "min_len={} max_len={} max_vars={} connected={} variables_only={} require_core={}",
            self.min_len,
            self.max_len,
            vars,
            self.connected,
            self.variables_only,
            self.require_core
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{canonicalize, parse_sentence, Atom, Term};
    use proptest::prelude::*;

    fn s(text: &str) -> Sentence {
        canonicalize(&parse_sentence(text).unwrap())
    }

    fn smokers_bias() -> LanguageBias {
        LanguageBias::lengths(2, 3)
    }

    #[test]
    fn smokers_membership() {
        let b = smokers_bias();
        assert!(b.conforms(&s("smokes(X), cancer(X), friends(X,Y)")));
        assert!(!b.conforms(&s("smokes(X)")));
        assert!(!b.conforms(&s("friends(X,Y), friends(X,Z)")));
        assert!(!b.conforms(&s("smokes(X), cancer(Y)")));
        assert!(!b.conforms(&s("smokes(john), friends(john,X)")));
        assert!(!b.conforms(&s("smokes(X), friends(X,Y), cancer(Y), smokes(Y)")));
    }

    #[test]
    fn max_vars_bound() {
        let b = LanguageBias::lengths(1, 3).with_max_vars(2);
        assert!(b.conforms(&s("friends(X,Y), smokes(Y)")));
        assert!(!b.conforms(&s("friends(X,Y), friends(Y,Z)")));
    }

    #[test]
    fn parse_defaults_and_keys() {
        assert_eq!(parse_bias("").unwrap(), LanguageBias::default());
        let b = parse_bias("min_len = 2\nmax_len=3 # inline\nmax_vars = 2\nconnected = false\n")
            .unwrap();
        assert_eq!(b.min_len, 2);
        assert_eq!(b.max_vars, Some(2));
        assert!(!b.connected);
        assert_eq!(parse_bias(&b.to_string()).unwrap(), b);
    }

    #[test]
    fn parse_rejects() {
        assert!(parse_bias("min_len = 4\nmax_len = 3").is_err());
        assert!(parse_bias("min_len = 0").is_err());
        assert!(parse_bias("max_vars = 0").is_err());
        assert!(parse_bias("depth = 3").is_err());
        assert!(parse_bias("connected = maybe").is_err());
        assert!(parse_bias("connected").is_err());
    }

    fn arb_sentence() -> impl Strategy<Value = Sentence> {
        let atom = (0usize..3, 0u32..4, 0u32..4, any::<bool>()).prop_map(|(p, a, b, c)| {
            let second = if c { Term::constant("k") } else { Term::Var(b) };
            match p {
                0 => Atom::new("p", vec![Term::Var(a)]),
                1 => Atom::new("r", vec![Term::Var(a), second]),
                _ => Atom::new("q", vec![Term::Var(a), Term::Var(b)]),
            }
        });
        prop::collection::vec(atom, 1..=4).prop_map(Sentence::new)
    }

    proptest! {
        #[test]
        fn conformance_is_renaming_invariant(sent in arb_sentence(), shift in 1u32..7) {
            let map = sent.variables().into_iter().map(|v| (v, (v + shift) % 7 + 10)).collect();
            let renamed = sent.rename(&map);
            for b in [LanguageBias::default(), LanguageBias::lengths(2, 3).with_max_vars(2), smokers_bias()] {
                prop_assert_eq!(b.conforms(&canonicalize(&sent)), b.conforms(&canonicalize(&renamed)));
            }
        }

        #[test]
        fn unrestricted_accepts_everything(sent in arb_sentence()) {
            prop_assert!(LanguageBias::unrestricted().conforms(&canonicalize(&sent)));
        }
    }
}
