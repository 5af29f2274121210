//! Validation of the dialogue extension inventory over parsed graphs.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, AddAssign};

use thiserror::Error;

use crate::graph::{AmrGraph, Constant, Role, Target};
use crate::links::{classify_reference, ReferenceShape};
use crate::penman::{self, ParseErrorKind};

pub const DISCOURSE_MARKER: &str = ":discourse-marker";
pub const BACK_CHANNEL: &str = ":back-channel";
pub const REPARANDUM: &str = ":reparandum";
pub const BE_DISCOURSE_MARKER: &str = "be-discourse-marker-91";
pub const BE_BACK_CHANNEL: &str = "be-back-channel-91";

const MODES: &[&str] = &["imperative", "expressive", "interrogative"];

const DEFAULT_INVENTORY: &str = include_str!("../data/roles.txt");

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("line {line}: `{text}` is not a role label")]
    BadRole { line: usize, text: String },
    #[error("line {line}: unknown section `{text}`")]
    BadSection { line: usize, text: String },
    #[error("line {line}: entry outside of any section")]
    NoSection { line: usize },
    #[error("role `{0}` is listed both as standard and as extension")]
    Overlap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Legal role labels and reification concepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleInventory {
    standard: BTreeSet<String>,
    /// Prefixes of numbered families such as `:op` (matches `:op1`, `:op12`).
    families: BTreeSet<String>,
    extensions: BTreeSet<String>,
    reifications: BTreeSet<String>,
}

impl Default for RoleInventory {
    fn default() -> Self {
        RoleInventory::parse(DEFAULT_INVENTORY).expect("bundled inventory is well formed")
    }
}

impl RoleInventory {
    pub fn parse(text: &str) -> Result<Self, InventoryError> {
        #[derive(Clone, Copy)]
        enum Section {
            Roles,
            Extensions,
            Reifications,
        }
        let mut inv = RoleInventory {
            standard: BTreeSet::new(),
            families: BTreeSet::new(),
            extensions: BTreeSet::new(),
            reifications: BTreeSet::new(),
        };
        let mut section = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = Some(match &line[1..line.len() - 1] {
                    "roles" => Section::Roles,
                    "extensions" => Section::Extensions,
                    "reifications" => Section::Reifications,
                    _ => return Err(InventoryError::BadSection { line: line_no, text: line.into() }),
                });
                continue;
            }
            match section {
                None => return Err(InventoryError::NoSection { line: line_no }),
                Some(Section::Reifications) => {
                    inv.reifications.insert(line.to_string());
                }
                Some(s) => {
                    let bad = || InventoryError::BadRole { line: line_no, text: line.into() };
                    if let Some(prefix) = line.strip_suffix('*') {
                        Role::new(format!("{prefix}1")).ok_or_else(bad)?;
                        inv.families.insert(prefix.to_string());
                    } else {
                        Role::new(line).ok_or_else(bad)?;
                        match s {
                            Section::Roles => inv.standard.insert(line.to_string()),
                            _ => inv.extensions.insert(line.to_string()),
                        };
                    }
                }
            }
        }
        if let Some(r) = inv.standard.intersection(&inv.extensions).next() {
            return Err(InventoryError::Overlap(r.clone()));
        }
        Ok(inv)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, InventoryError> {
        RoleInventory::parse(&std::fs::read_to_string(path)?)
    }

    /// Adds roles to the standard set.
    pub fn allow<I: IntoIterator<Item = S>, S: Into<String>>(mut self, roles: I) -> Self {
        for r in roles {
            let r = r.into();
            if !self.extensions.contains(&r) {
                self.standard.insert(r);
            }
        }
        self
    }

    pub fn is_extension(&self, role: &str) -> bool {
        self.extensions.contains(role)
    }

    pub fn is_reification(&self, concept: &str) -> bool {
        self.reifications.contains(concept)
    }

    fn is_standard(&self, role: &str) -> bool {
        if self.standard.contains(role) {
            return true;
        }
        self.families.iter().any(|prefix| {
            role.strip_prefix(prefix.as_str())
                .is_some_and(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()))
        })
    }

    pub fn knows(&self, role: &str) -> bool {
        if self.is_standard(role) || self.is_extension(role) {
            return true;
        }
        match role.strip_suffix("-of") {
            Some(base) if !base.ends_with("-of") => self.is_standard(base),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// Validation rules. The identifiers are stable and appear in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Directed cycle after inverse-role normalization.
    Cycle,
    /// Instance unreachable from the root.
    Disconnected,
    UnknownRole,
    /// `:discourse-marker` must point at a quoted string.
    DiscourseMarkerTarget,
    /// `be-back-channel-91` should carry a string `:ARG2`.
    BackChannelArgument,
    Polarity,
    Mode,
    /// A variable spelled like a reference node redefined with another concept.
    ReferenceRedefinition,
    MalformedReference,
    /// Reentrancy or root naming a variable that is never defined.
    UndefinedVariable,
    /// Non-reified `:back-channel`, accepted but not yet settled.
    BackChannelRole,
    /// The graph text could not be parsed at all.
    Parse,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::Cycle => "R1",
            Rule::Disconnected => "R2",
            Rule::UnknownRole => "R3",
            Rule::DiscourseMarkerTarget => "R4",
            Rule::BackChannelArgument => "R5",
            Rule::Polarity => "R6",
            Rule::Mode => "R7",
            Rule::ReferenceRedefinition => "R8",
            Rule::MalformedReference => "R9",
            Rule::UndefinedVariable => "R10",
            Rule::BackChannelRole => "R11",
            Rule::Parse => "P0",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Finding {
    pub rule: Rule,
    pub severity: Severity,
    /// A variable, or `source :role target` for a relation.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} [{}] {}", self.severity, self.rule, self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn rules(&self) -> BTreeSet<Rule> {
        self.findings.iter().map(|f| f.rule).collect()
    }

    fn push(&mut self, rule: Rule, severity: Severity, location: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding { rule, severity, location: location.into(), message: message.into() });
    }
}

fn relation_location(source: &str, role: &Role, target: &Target) -> String {
    match target {
        Target::Node(v) => format!("{source} {role} {v}"),
        Target::Const(c) => format!("{source} {role} {c}"),
    }
}

pub fn validate(graph: &AmrGraph, inventory: &RoleInventory, strict: bool) -> ValidationReport {
    let mut report = ValidationReport::default();

    for e in graph.cyclic_edges() {
        report.push(
            Rule::Cycle,
            Severity::Error,
            format!("{} {} {}", e.source, e.role, e.target),
            "edge lies on a directed cycle",
        );
    }
    for v in graph.unreachable() {
        report.push(Rule::Disconnected, Severity::Error, v.as_str(), "instance is not connected to the root");
    }
    for v in graph.undefined_variables() {
        report.push(Rule::UndefinedVariable, Severity::Error, v.as_str(), "variable has no instance");
    }

    for rel in &graph.relations {
        let role = rel.role.as_str();
        let loc = || relation_location(rel.source.as_str(), &rel.role, &rel.target);
        if !inventory.knows(role) {
            let severity = if strict { Severity::Error } else { Severity::Warning };
            report.push(Rule::UnknownRole, severity, loc(), format!("role {role} is not in the inventory"));
        }
        match role {
            DISCOURSE_MARKER if !matches!(rel.target, Target::Const(Constant::Str(_))) => {
                report.push(
                    Rule::DiscourseMarkerTarget,
                    Severity::Error,
                    loc(),
                    "discourse marker value must be a quoted string",
                );
            }
            BACK_CHANNEL if strict => {
                report.push(Rule::BackChannelRole, Severity::Warning, loc(), "non-reified :back-channel role");
            }
            ":polarity" => {
                let ok = match &rel.target {
                    Target::Const(Constant::Symbol(s)) => s == "-",
                    Target::Const(_) => false,
                    Target::Node(v) => graph.concept(v).is_some_and(|c| c.as_str() == "amr-unknown"),
                };
                if !ok {
                    report.push(Rule::Polarity, Severity::Error, loc(), "polarity must be `-` or amr-unknown");
                }
            }
            ":mode" => {
                let ok = matches!(&rel.target, Target::Const(Constant::Symbol(s)) if MODES.contains(&s.as_str()));
                if !ok {
                    report.push(
                        Rule::Mode,
                        Severity::Error,
                        loc(),
                        "mode must be imperative, expressive or interrogative",
                    );
                }
            }
            _ => {}
        }
    }

    for (var, concept) in &graph.instances {
        if concept.as_str() == BE_BACK_CHANNEL {
            let has_arg2 = graph.attributes().any(|a| {
                a.source == var && a.role.as_str() == ":ARG2" && a.value.is_string()
            });
            if !has_arg2 {
                report.push(
                    Rule::BackChannelArgument,
                    Severity::Warning,
                    var.as_str(),
                    "be-back-channel-91 without a string :ARG2",
                );
            }
        }
        match classify_reference(concept.as_str()) {
            ReferenceShape::Malformed => report.push(
                Rule::MalformedReference,
                Severity::Error,
                var.as_str(),
                format!("`{concept}` looks like a reference node but does not match s<ID>_<var>_<concept>"),
            ),
            ReferenceShape::NotReference | ReferenceShape::Reference { .. } => {}
        }
        if let ReferenceShape::Reference { concept: embedded, .. } = classify_reference(var.as_str()) {
            if embedded.to_lowercase() != concept.folded() {
                report.push(
                    Rule::ReferenceRedefinition,
                    Severity::Error,
                    var.as_str(),
                    format!("reference-named variable redefined as `{concept}` instead of `{embedded}`"),
                );
            }
        }
    }
    report
}

/// Parses then validates; parse failures become findings. A reentrancy to an
/// undefined variable is reported under the same rule as in `validate`.
pub fn validate_text(text: &str, inventory: &RoleInventory, strict: bool) -> ValidationReport {
    match penman::parse(text) {
        Ok(g) => validate(&g, inventory, strict),
        Err(e) => {
            let rule = match e.kind() {
                ParseErrorKind::DanglingReentrancy => Rule::UndefinedVariable,
                _ => Rule::Parse,
            };
            let mut report = ValidationReport::default();
            report.push(rule, Severity::Error, format!("offset {}", e.offset()), e.to_string());
            report
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtensionCounts {
    pub discourse_markers: usize,
    pub backchannels: usize,
    pub reparanda: usize,
}

impl ExtensionCounts {
    pub fn total(&self) -> usize {
        self.discourse_markers + self.backchannels + self.reparanda
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0
    }
}

impl Add for ExtensionCounts {
    type Output = ExtensionCounts;

    fn add(self, o: ExtensionCounts) -> ExtensionCounts {
        ExtensionCounts {
            discourse_markers: self.discourse_markers + o.discourse_markers,
            backchannels: self.backchannels + o.backchannels,
            reparanda: self.reparanda + o.reparanda,
        }
    }
}

impl AddAssign for ExtensionCounts {
    fn add_assign(&mut self, o: ExtensionCounts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ExtensionCounts {
    fn sum<I: Iterator<Item = ExtensionCounts>>(iter: I) -> Self {
        iter.fold(ExtensionCounts::default(), Add::add)
    }
}

pub fn count_extensions(graph: &AmrGraph) -> ExtensionCounts {
    let mut counts = ExtensionCounts::default();
    for rel in &graph.relations {
        match rel.role.as_str() {
            DISCOURSE_MARKER => counts.discourse_markers += 1,
            BACK_CHANNEL => counts.backchannels += 1,
            REPARANDUM => counts.reparanda += 1,
            _ => {}
        }
    }
    for concept in graph.instances.values() {
        match concept.as_str() {
            BE_DISCOURSE_MARKER => counts.discourse_markers += 1,
            BE_BACK_CHANNEL => counts.backchannels += 1,
            _ => {}
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::parse;

    const PUT_ROAD: &str = "(p / put-01 :ARG0 (y / you) :ARG1 (r / road) :mode imperative \
                            :ARG2 (h / here) :polarity - :discourse-marker \"donc\")";

    fn rules(text: &str, strict: bool) -> Vec<&'static str> {
        let g = parse(text).unwrap();
        validate(&g, &RoleInventory::default(), strict).findings.iter().map(|f| f.rule.id()).collect()
    }

    #[test]
    fn conformant_examples() {
        assert!(rules(PUT_ROAD, true).is_empty());
        assert!(rules("(b / be-back-channel-91 :ARG2 \"hum\")", true).is_empty());
    }

    #[test]
    fn constructed_cycle() {
        let mut g = parse("(b / break-01 :ARG0 (m / man) :ARG1 (w / window))").unwrap();
        g.add_edge(
            crate::graph::Variable::new("w").unwrap(),
            Role::new(":ARG0").unwrap(),
            crate::graph::Variable::new("b").unwrap(),
        );
        let report = validate(&g, &RoleInventory::default(), true);
        assert!(report.has_errors());
        assert!(report.findings.iter().all(|f| f.rule == Rule::Cycle));
    }

    #[test]
    fn unknown_role_severity_follows_strictness() {
        let text = "(p / put-01 :discourse-markr \"et\")";
        let g = parse(text).unwrap();
        let strict = validate(&g, &RoleInventory::default(), true);
        assert_eq!(strict.findings.len(), 1);
        assert_eq!(strict.findings[0].rule, Rule::UnknownRole);
        assert_eq!(strict.findings[0].severity, Severity::Error);
        assert_eq!(strict.findings[0].location, "p :discourse-markr \"et\"");
        let lax = validate(&g, &RoleInventory::default(), false);
        assert_eq!(lax.findings[0].severity, Severity::Warning);
        assert!(!lax.has_errors());
    }

    #[test]
    fn rule_violations() {
        assert_eq!(rules("(p / put-01 :discourse-marker (d / donc))", true), ["R4"]);
        assert_eq!(rules("(p / put-01 :discourse-marker donc)", true), ["R4"]);
        assert_eq!(rules("(b / be-back-channel-91)", true), ["R5"]);
        assert_eq!(rules("(p / put-01 :polarity +)", true), ["R6"]);
        assert_eq!(rules("(p / put-01 :polarity (y / yes))", true), ["R6"]);
        assert_eq!(rules("(p / put-01 :mode question)", true), ["R7"]);
        assert_eq!(rules("(s0080B_s_stone / sheep)", true), ["R8"]);
        assert!(rules("(s0080B_s_stone / stone)", true).is_empty());
        assert_eq!(rules("(s / s0080B-stone_x)", true), ["R9"]);
        assert_eq!(rules("(p / put-01 :back-channel \"hum\")", true), ["R11"]);
        assert!(rules("(p / put-01 :back-channel \"hum\")", false).is_empty());
    }

    #[test]
    fn undefined_variable_from_text_and_graph() {
        let report = validate_text("(b / bad :ARG0 b2)", &RoleInventory::default(), true);
        assert_eq!(report.rules().into_iter().collect::<Vec<_>>(), [Rule::UndefinedVariable]);
        let mut g = parse("(b / bad)").unwrap();
        g.add_edge(
            crate::graph::Variable::new("b").unwrap(),
            Role::new(":ARG0").unwrap(),
            crate::graph::Variable::new("b2").unwrap(),
        );
        assert!(validate(&g, &RoleInventory::default(), true).rules().contains(&Rule::UndefinedVariable));
    }

    #[test]
    fn inventory_families_and_inverses() {
        let inv = RoleInventory::default();
        assert!(inv.knows(":op12"));
        assert!(inv.knows(":snt3"));
        assert!(!inv.knows(":op"));
        assert!(inv.knows(":ARG2-of"));
        assert!(inv.knows(":consist-of"));
        assert!(!inv.knows(":consist-of-of"));
        assert!(!inv.knows(":discourse-marker-of"));
        assert!(inv.is_reification("request-confirmation-91"));
        assert!(inv.clone().allow([":custom"]).knows(":custom"));
    }

    #[test]
    fn inventory_file_errors() {
        assert!(matches!(RoleInventory::parse(":ARG0"), Err(InventoryError::NoSection { line: 1 })));
        assert!(matches!(RoleInventory::parse("[roles]\nARG0"), Err(InventoryError::BadRole { line: 2, .. })));
        assert!(matches!(RoleInventory::parse("[nope]"), Err(InventoryError::BadSection { .. })));
        assert!(matches!(
            RoleInventory::parse("[roles]\n:x\n[extensions]\n:x"),
            Err(InventoryError::Overlap(_))
        ));
    }

    #[test]
    fn counts() {
        let g = parse(PUT_ROAD).unwrap();
        assert_eq!(count_extensions(&g).discourse_markers, 1);
        let g = parse("(b / be-back-channel-91 :ARG2 \"hum\")").unwrap();
        assert_eq!(count_extensions(&g), ExtensionCounts { discourse_markers: 0, backchannels: 1, reparanda: 0 });
        let g = parse("(b / break-01 :ARG0 (m / man))").unwrap();
        assert!(count_extensions(&g).is_zero());
    }
}
