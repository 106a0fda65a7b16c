//! Variable masking: collapses the dynamic part of a log line into
//! placeholders so that only the constant template text remains.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

/// The closed set of placeholder tokens a rule may emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placeholder {
    Ts,
    Ip,
    Hex,
    Num,
    Path,
    Id,
}

impl Placeholder {
    pub const ALL: [Placeholder; 6] = [
        Placeholder::Ts,
        Placeholder::Ip,
        Placeholder::Hex,
        Placeholder::Num,
        Placeholder::Path,
        Placeholder::Id,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Placeholder::Ts => "<TS>",
            Placeholder::Ip => "<IP>",
            Placeholder::Hex => "<HEX>",
            Placeholder::Num => "<NUM>",
            Placeholder::Path => "<PATH>",
            Placeholder::Id => "<ID>",
        }
    }

    pub fn is_placeholder(token: &str) -> bool {
        Placeholder::ALL.iter().any(|p| p.as_str() == token)
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Placeholder {
    type Err = MaskConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Placeholder::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| MaskConfigError::UnknownPlaceholder(s.to_owned()))
    }
}

#[derive(Debug, Error)]
pub enum MaskConfigError {
    #[error("rule {index}: invalid pattern: {source}")]
    Pattern {
        index: usize,
        #[source]
        source: regex::Error,
    },
    #[error("unknown placeholder {0:?}; expected one of <TS>, <IP>, <HEX>, <NUM>, <PATH>, <ID>")]
    UnknownPlaceholder(String),
    #[error("rule file: {0}")]
    Parse(String),
}

/// A matcher and the placeholder its matches collapse into.
#[derive(Debug, Clone)]
pub struct MaskRule {
    pattern: Regex,
    replacement: Placeholder,
}

const TS_PATTERN: &str =
    r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:[.,]\d+)?(?:Z|[+-]\d{2}:?\d{2})?";
const UUID_PATTERN: &str =
    r"\b[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}\b";
const IP_PATTERN: &str = r"\b(?:\d{1,3}\.){3}\d{1,3}(?::\d{1,5})?\b";
const PATH_PATTERN: &str = r"(?:[A-Za-z]:)?(?:/[A-Za-z0-9._~-]+){2,}/?";
// word, then a separator and a digit: worker-7, blk_1073741825_1001, app-20/3
const ID_PATTERN: &str =
    r"\b[A-Za-z][A-Za-z0-9]*(?:[-_][A-Za-z]+)*[-_]\d(?:[A-Za-z0-9_./-]*[A-Za-z0-9])?";
// hex must mix digits and letters, otherwise words like "added" would match
const HEX_PATTERN: &str =
    r"\b0[xX][0-9a-fA-F]+\b|\b[0-9a-fA-F]*(?:[0-9][a-fA-F]|[a-fA-F][0-9])[0-9a-fA-F]*\b";
const NUM_PATTERN: &str = r"\d+(?:\.\d+)?";

impl MaskRule {
    pub fn new(pattern: &str, replacement: Placeholder) -> Result<Self, regex::Error> {
        Ok(MaskRule {
            pattern: Regex::new(pattern)?,
            replacement,
        })
    }

    fn builtin(pattern: &str, replacement: Placeholder) -> Self {
        MaskRule::new(pattern, replacement).expect("built-in pattern compiles")
    }

    pub fn timestamp() -> Self {
        Self::builtin(TS_PATTERN, Placeholder::Ts)
    }

    pub fn uuid() -> Self {
        Self::builtin(UUID_PATTERN, Placeholder::Id)
    }

    pub fn ipv4() -> Self {
        Self::builtin(IP_PATTERN, Placeholder::Ip)
    }

    pub fn path() -> Self {
        Self::builtin(PATH_PATTERN, Placeholder::Path)
    }

    pub fn identifier() -> Self {
        Self::builtin(ID_PATTERN, Placeholder::Id)
    }

    pub fn hex() -> Self {
        Self::builtin(HEX_PATTERN, Placeholder::Hex)
    }

    pub fn number() -> Self {
        Self::builtin(NUM_PATTERN, Placeholder::Num)
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }

    pub fn replacement(&self) -> Placeholder {
        self.replacement
    }

    fn apply<'t>(&self, text: Cow<'t, str>) -> Cow<'t, str> {
        match self.pattern.replace_all(&text, self.replacement.as_str()) {
            Cow::Borrowed(_) => text,
            Cow::Owned(s) => Cow::Owned(s),
        }
    }
}

/// An ordered list of mask rules.
#[derive(Debug, Clone)]
pub struct MaskSet {
    rules: Vec<MaskRule>,
}

#[derive(Deserialize)]
struct RuleFile {
    #[serde(default, rename = "rule")]
    rules: Vec<RuleEntry>,
}

#[derive(Deserialize)]
struct RuleEntry {
    pattern: String,
    replacement: String,
}

impl MaskSet {
    pub fn new(rules: Vec<MaskRule>) -> Self {
        MaskSet { rules }
    }

    /// A set that masks nothing.
    pub fn empty() -> Self {
        MaskSet { rules: Vec::new() }
    }

    /// Timestamps, UUIDs, IPv4 addresses, paths, compound identifiers, hex
    /// strings and decimal numbers, in that order.
    pub fn default_rules() -> Self {
        MaskSet::new(vec![
            MaskRule::timestamp(),
            MaskRule::uuid(),
            MaskRule::ipv4(),
            MaskRule::path(),
            MaskRule::identifier(),
            MaskRule::hex(),
            MaskRule::number(),
        ])
    }

    /// Builds a set from `(pattern, placeholder)` pairs, validating both.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, MaskConfigError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut rules = Vec::new();
        for (index, (pattern, replacement)) in pairs.into_iter().enumerate() {
            let replacement: Placeholder = replacement.parse()?;
            let rule = MaskRule::new(pattern, replacement)
                .map_err(|source| MaskConfigError::Pattern { index, source })?;
            rules.push(rule);
        }
        Ok(MaskSet::new(rules))
    }

    /// Parses a TOML rule file:
    ///
    /// ```toml
    /// [[rule]]
    /// pattern = '\d+'
    /// replacement = "<NUM>"
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, MaskConfigError> {
        let file: RuleFile =
            toml::from_str(text).map_err(|e| MaskConfigError::Parse(e.to_string()))?;
        MaskSet::from_pairs(
            file.rules
                .iter()
                .map(|r| (r.pattern.as_str(), r.replacement.as_str())),
        )
    }

    pub fn rules(&self) -> &[MaskRule] {
        &self.rules
    }
}

impl Default for MaskSet {
    fn default() -> Self {
        MaskSet::default_rules()
    }
}

/// Replaces every maximal match of each rule, in rule order.
pub fn mask(text: &str, rules: &MaskSet) -> String {
    rules
        .rules
        .iter()
        .fold(Cow::Borrowed(text), |acc, rule| rule.apply(acc))
        .into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_then_num_masks_executor_line() {
        let rules = MaskSet::new(vec![MaskRule::identifier(), MaskRule::number()]);
        assert_eq!(
            mask(
                "Executor added: app-20/3 on worker-7 with 4 core(s)",
                &rules
            ),
            "Executor added: <ID> on <ID> with <NUM> core(s)"
        );
        assert_eq!(
            mask(
                "Executor added: app-20/3 on worker-7 with 4 core(s)",
                &MaskSet::default()
            ),
            "Executor added: <ID> on <ID> with <NUM> core(s)"
        );
    }

    #[test]
    fn text_without_matches_is_unchanged() {
        let rules = MaskSet::new(vec![MaskRule::number()]);
        assert_eq!(mask("no digits here", &rules), "no digits here");
    }

    #[test]
    fn ip_before_num_wins() {
        let rules = MaskSet::new(vec![MaskRule::ipv4(), MaskRule::number()]);
        assert_eq!(mask("192.168.210.11", &rules), "<IP>");
        let reversed = MaskSet::new(vec![MaskRule::number(), MaskRule::ipv4()]);
        assert_ne!(mask("192.168.210.11", &reversed), "<IP>");
    }

    #[test]
    fn default_rules_cover_common_fields() {
        let d = MaskSet::default();
        assert_eq!(mask("2021-03-04T05:06:07.123Z start", &d), "<TS> start");
        assert_eq!(
            mask("instance 123e4567-e89b-12d3-a456-426614174000 built", &d),
            "instance <ID> built"
        );
        assert_eq!(
            mask("wrote /user/hadoop/out/part-00001", &d),
            "wrote <PATH>"
        );
        assert_eq!(mask("report 0x1f3a sent", &d), "report <HEX> sent");
        assert_eq!(mask("digest 9f8e7d6c ok", &d), "digest <HEX> ok");
        assert_eq!(mask("took 12.5 ms", &d), "took <NUM> ms");
        assert_eq!(mask("block added to cache", &d), "block added to cache");
    }

    #[test]
    fn bad_rules_fail_at_load_time() {
        assert!(matches!(
            MaskSet::from_pairs([("(unclosed", "<NUM>")]),
            Err(MaskConfigError::Pattern { index: 0, .. })
        ));
        assert!(matches!(
            MaskSet::from_pairs([(r"\d+", "<DIGITS>")]),
            Err(MaskConfigError::UnknownPlaceholder(_))
        ));
    }

    #[test]
    fn rule_file_parses() {
        let set = MaskSet::from_toml(
            r#"
            [[rule]]
            pattern = '\d+'
            replacement = "<NUM>"

            [[rule]]
            pattern = 'node-\w+'
            replacement = "<ID>"
            "#,
        )
        .unwrap();
        assert_eq!(set.rules().len(), 2);
        assert_eq!(mask("node-a got 3", &set), "<ID> got <NUM>");
        assert!(MaskSet::from_toml("[[rule]]\npattern = 1").is_err());
    }
}
