//! Benchmark specifications, variants, parameter points and invocation
//! resolution.
//!
//! A [`BenchmarkSpec`] describes one benchmark as a command template with
//! `{name}` placeholders. Placeholders are filled from two disjoint sources:
//! the bindings of a [`Variant`] (which implementation is measured) and a
//! [`ParamPoint`] (one concrete choice for every declared parameter). A name
//! bound by both sources is an error rather than a silent override.
//!
//! Literal braces are written doubled: `{{` and `}}`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

/// A concrete choice for every declared parameter.
pub type ParamPoint = BTreeMap<String, String>;

/// Name used for the implicit variant of a spec that declares none.
pub const DEFAULT_VARIANT: &str = "default";

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub id: String,
    pub command_template: String,
    #[serde(default)]
    pub env_template: BTreeMap<String, String>,
    #[serde(default)]
    pub params: BTreeMap<String, ValueDomain>,
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub warmup_count: u32,
    #[serde(default)]
    pub run_policy: RunPolicy,
    #[serde(default)]
    pub check_template: Option<String>,
    #[serde(default)]
    pub expected_wall_range: Option<(f64, f64)>,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Disabled specs are skipped by `run` unless named with `--only`.
    #[serde(default = "default_true")]
    pub enabled: bool,
    /// Run the command through `sh -c` instead of executing it directly.
    #[serde(default)]
    pub shell: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
}

impl Variant {
    pub fn new<N: Into<String>>(name: N) -> Self {
        Variant { name: name.into(), bindings: BTreeMap::new() }
    }

    pub fn bind<K: Into<String>, V: Into<String>>(mut self, key: K, value: V) -> Self {
        self.bindings.insert(key.into(), value.into());
        self
    }
}

/// The values a parameter may take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueDomain {
    Values(#[serde(deserialize_with = "de_text_values")] Vec<String>),
    Linear(RangeGenerator),
    Log(RangeGenerator),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeGenerator {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

/// Parameter values may be written as strings or bare numbers in the
/// project file; either way they are carried as text.
fn de_text_values<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
        Float(f64),
    }
    let raw = Vec::<Raw>::deserialize(de)?;
    Ok(raw
        .into_iter()
        .map(|r| match r {
            Raw::Text(s) => s,
            Raw::Int(i) => i.to_string(),
            Raw::Float(f) => format_number(f),
        })
        .collect())
}

/// Formats a generated parameter value: integral values print without a
/// fractional part so that programs parsing integers accept them.
pub fn format_number(x: f64) -> String {
    let rounded = x.round();
    if x.is_finite() && (x - rounded).abs() <= 1e-9 * x.abs().max(1.0) && rounded.abs() < 9.0e15 {
        format!("{}", rounded as i64)
    } else {
        format!("{x}")
    }
}

impl RangeGenerator {
    pub fn linear_points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.start],
            n => {
                let step = (self.stop - self.start) / (n - 1) as f64;
                (0..n)
                    .map(|i| if i == n - 1 { self.stop } else { self.start + step * i as f64 })
                    .collect()
            }
        }
    }

    pub fn log_points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.start],
            n => {
                let (lo, hi) = (self.start.log10(), self.stop.log10());
                let step = (hi - lo) / (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            self.stop
                        } else {
                            snap(10f64.powf(lo + step * i as f64))
                        }
                    })
                    .collect()
            }
        }
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

impl ValueDomain {
    /// Numeric values of the domain, if every value parses as a number.
    pub fn numeric_values(&self) -> Option<Vec<f64>> {
        match self {
            ValueDomain::Values(v) => {
                v.iter().map(|s| s.replace('_', "").parse::<f64>().ok()).collect()
            }
            ValueDomain::Linear(g) => Some(g.linear_points()),
            ValueDomain::Log(g) => Some(g.log_points()),
        }
    }

    pub fn text_values(&self) -> Vec<String> {
        match self {
            ValueDomain::Values(v) => v.clone(),
            other => other
                .numeric_values()
                .unwrap_or_default()
                .into_iter()
                .map(format_number)
                .collect(),
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, ValueDomain::Log(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunPolicy {
    pub mode: RunMode,
    pub fixed_runs: u32,
    pub min_runs: u32,
    /// Seconds.
    pub min_total_time: f64,
    pub max_runs: u32,
}

impl Default for RunPolicy {
    fn default() -> Self {
        RunPolicy { mode: RunMode::Adaptive, fixed_runs: 10, min_runs: 10, min_total_time: 3.0, max_runs: 100 }
    }
}

impl RunPolicy {
    pub fn fixed(runs: u32) -> Self {
        RunPolicy { mode: RunMode::Fixed, fixed_runs: runs, ..RunPolicy::default() }
    }

    pub fn adaptive(min_runs: u32, min_total_time: f64, max_runs: u32) -> Self {
        RunPolicy { mode: RunMode::Adaptive, min_runs, min_total_time, max_runs, ..RunPolicy::default() }
    }

    /// Whether another run is needed after `done` runs taking `elapsed`
    /// seconds of cumulative wall time.
    pub fn wants_more(&self, done: u32, elapsed: f64) -> bool {
        match self.mode {
            RunMode::Fixed => done < self.fixed_runs,
            RunMode::Adaptive => {
                done < self.max_runs && (done < self.min_runs || elapsed < self.min_total_time)
            }
        }
    }

    fn problems(&self) -> Option<String> {
        match self.mode {
            RunMode::Fixed if self.fixed_runs == 0 => Some("fixed_runs must be positive".into()),
            RunMode::Adaptive if self.min_runs == 0 || self.max_runs == 0 => {
                Some("min_runs and max_runs must be positive".into())
            }
            RunMode::Adaptive if self.min_runs > self.max_runs => {
                Some(format!("min_runs ({}) exceeds max_runs ({})", self.min_runs, self.max_runs))
            }
            _ if self.min_total_time.is_nan() || self.min_total_time < 0.0 => Some("min_total_time must be >= 0".into()),
            _ => None,
        }
    }
}

/// A fully substituted command ready to be executed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteInvocation {
    pub argv: Vec<String>,
    pub env: BTreeMap<String, String>,
    pub spec_id: String,
    pub variant_name: String,
    pub param_point: ParamPoint,
}

impl ConcreteInvocation {
    /// Shell-style rendering, used in messages and report headers.
    pub fn display_command(&self) -> String {
        let mut words: Vec<String> =
            self.env.iter().map(|(k, v)| shell_words::quote(&format!("{k}={v}")).into_owned()).collect();
        words.extend(self.argv.iter().map(|a| shell_words::quote(a).into_owned()));
        words.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("placeholder {{{name}}} in {field} has no binding")]
    UnboundPlaceholder { name: String, field: String },
    #[error("`{name}` is bound both by variant `{variant}` and by the parameter point")]
    ConflictingBinding { name: String, variant: String },
    #[error("malformed template in {field}: {reason}")]
    MalformedTemplate { field: String, reason: String },
    #[error("parameter point does not match declared params: {0}")]
    PointMismatch(String),
    #[error("variant `{0}` does not belong to spec")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment<'a> {
    Literal(String),
    Placeholder(&'a str),
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'
}

fn parse_template(text: &str) -> Result<Vec<Segment<'_>>, String> {
    let mut out = Vec::new();
    let mut lit = String::new();
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        match c {
            '{' if matches!(iter.peek(), Some((_, '{'))) => {
                iter.next();
                lit.push('{');
            }
            '}' if matches!(iter.peek(), Some((_, '}'))) => {
                iter.next();
                lit.push('}');
            }
            '{' => {
                let start = i + 1;
                let end = loop {
                    match iter.next() {
                        Some((j, '}')) => break j,
                        Some((_, ch)) if is_name_char(ch) => {}
                        Some((_, ch)) => return Err(format!("invalid character {ch:?} in placeholder at byte {i}")),
                        None => return Err(format!("unterminated placeholder at byte {i}")),
                    }
                };
                if end == start {
                    return Err(format!("empty placeholder at byte {i}"));
                }
                if !lit.is_empty() {
                    out.push(Segment::Literal(std::mem::take(&mut lit)));
                }
                out.push(Segment::Placeholder(&text[start..end]));
            }
            '}' => return Err(format!("unmatched '}}' at byte {i}")),
            c => lit.push(c),
        }
    }
    if !lit.is_empty() {
        out.push(Segment::Literal(lit));
    }
    Ok(out)
}

/// Placeholder names used by a template, in order of first appearance.
pub fn placeholders(text: &str) -> Result<Vec<String>, String> {
    let mut seen = BTreeSet::new();
    Ok(parse_template(text)?
        .into_iter()
        .filter_map(|s| match s {
            Segment::Placeholder(n) if seen.insert(n) => Some(n.to_string()),
            _ => None,
        })
        .collect())
}

/// Substitutes `{name}` placeholders using `lookup`.
pub fn substitute<F>(text: &str, field: &str, lookup: F) -> Result<String, ResolveError>
where
    F: Fn(&str) -> Option<String>,
{
    let segments = parse_template(text)
        .map_err(|reason| ResolveError::MalformedTemplate { field: field.to_string(), reason })?;
    let mut out = String::with_capacity(text.len());
    for seg in segments {
        match seg {
            Segment::Literal(l) => out.push_str(&l),
            Segment::Placeholder(name) => match lookup(name) {
                Some(v) => out.push_str(&v),
                None => {
                    return Err(ResolveError::UnboundPlaceholder {
                        name: name.to_string(),
                        field: field.to_string(),
                    })
                }
            },
        }
    }
    Ok(out)
}

fn is_env_assignment(word: &str) -> Option<(&str, &str)> {
    let (name, value) = word.split_once('=')?;
    let mut chars = name.chars();
    let first = chars.next()?;
    if (first.is_ascii_alphabetic() || first == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Some((name, value))
    } else {
        None
    }
}

impl BenchmarkSpec {
    /// A spec with the given id and command and every other field defaulted.
    pub fn new<I: Into<String>, C: Into<String>>(id: I, command: C) -> Self {
        BenchmarkSpec {
            id: id.into(),
            command_template: command.into(),
            env_template: BTreeMap::new(),
            params: BTreeMap::new(),
            variants: Vec::new(),
            warmup_count: 0,
            run_policy: RunPolicy::default(),
            check_template: None,
            expected_wall_range: None,
            tags: Vec::new(),
            enabled: true,
            shell: false,
        }
    }

    /// Declared variants, or a single implicit empty variant.
    pub fn effective_variants(&self) -> Vec<Variant> {
        if self.variants.is_empty() {
            vec![Variant::new(DEFAULT_VARIANT)]
        } else {
            self.variants.clone()
        }
    }

    pub fn variant(&self, name: &str) -> Option<Variant> {
        self.effective_variants().into_iter().find(|v| v.name == name)
    }

    /// Cartesian product of all parameter domains, in name order.
    pub fn param_points(&self) -> Vec<ParamPoint> {
        let mut points = vec![ParamPoint::new()];
        for (name, domain) in &self.params {
            let values = domain.text_values();
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), v.clone());
                        q
                    })
                })
                .collect();
        }
        points
    }

    fn check_point(&self, point: &ParamPoint) -> Result<(), ResolveError> {
        let declared: BTreeSet<&String> = self.params.keys().collect();
        let given: BTreeSet<&String> = point.keys().collect();
        if declared != given {
            let missing: Vec<_> = declared.difference(&given).map(|s| s.as_str()).collect();
            let extra: Vec<_> = given.difference(&declared).map(|s| s.as_str()).collect();
            return Err(ResolveError::PointMismatch(format!("missing {missing:?}, undeclared {extra:?}")));
        }
        Ok(())
    }

    fn lookup_table(&self, variant: &Variant, point: &ParamPoint) -> Result<BTreeMap<String, String>, ResolveError> {
        self.check_point(point)?;
        let mut table = point.clone();
        for (k, v) in &variant.bindings {
            if table.insert(k.clone(), v.clone()).is_some() {
                return Err(ResolveError::ConflictingBinding { name: k.clone(), variant: variant.name.clone() });
            }
        }
        Ok(table)
    }

    fn build_argv(&self, command: &str, env: &mut BTreeMap<String, String>, table: &BTreeMap<String, String>) -> Result<Vec<String>, ResolveError> {
        if self.shell {
            let line = substitute(command, "command_template", |n| table.get(n).cloned())?;
            return Ok(vec!["sh".into(), "-c".into(), line]);
        }
        let words = shell_words::split(command).map_err(|e| ResolveError::MalformedTemplate {
            field: "command_template".into(),
            reason: e.to_string(),
        })?;
        let mut argv = Vec::with_capacity(words.len());
        for word in words {
            let w = substitute(&word, "command_template", |n| table.get(n).cloned())?;
            // Leading NAME=value words set the child's environment, as in a shell.
            match is_env_assignment(&w) {
                Some((k, v)) if argv.is_empty() => {
                    env.insert(k.to_string(), v.to_string());
                }
                _ => argv.push(w),
            }
        }
        if argv.is_empty() {
            return Err(ResolveError::MalformedTemplate {
                field: "command_template".into(),
                reason: "no program to execute".into(),
            });
        }
        Ok(argv)
    }

    fn resolve_with(&self, command: &str, variant: &Variant, point: &ParamPoint) -> Result<ConcreteInvocation, ResolveError> {
        let table = self.lookup_table(variant, point)?;
        let mut env = BTreeMap::new();
        for (k, tmpl) in &self.env_template {
            let field = format!("env_template.{k}");
            env.insert(k.clone(), substitute(tmpl, &field, |n| table.get(n).cloned())?);
        }
        let argv = self.build_argv(command, &mut env, &table)?;
        Ok(ConcreteInvocation {
            argv,
            env,
            spec_id: self.id.clone(),
            variant_name: variant.name.clone(),
            param_point: point.clone(),
        })
    }

    /// Resolves the correctness-check command, if the spec has one.
    pub fn resolve_check(&self, variant: &Variant, point: &ParamPoint) -> Option<Result<ConcreteInvocation, ResolveError>> {
        self.check_template.as_ref().map(|t| self.resolve_with(t, variant, point))
    }
}

/// Substitutes every placeholder of the spec's command and environment.
pub fn resolve_invocation(spec: &BenchmarkSpec, variant: &Variant, point: &ParamPoint) -> Result<ConcreteInvocation, ResolveError> {
    if !spec.effective_variants().iter().any(|v| v == variant) {
        return Err(ResolveError::UnknownVariant(variant.name.clone()));
    }
    spec.resolve_with(&spec.command_template, variant, point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    EmptyId,
    DuplicateSpecId { id: String },
    DuplicateVariant { name: String },
    EmptyVariantName,
    EmptyBindingValue { variant: String, name: String },
    EmptyParamDomain { param: String },
    InvalidParamDomain { param: String, reason: String },
    MalformedTemplate { field: String, reason: String },
    UncoveredPlaceholder { name: String, variant: String },
    ConflictingBinding { name: String, variant: String },
    InvalidWallRange { low: f64, high: f64 },
    InvalidRunPolicy { reason: String },
    IdenticalVariants { first: String, second: String },
}

impl Diagnostic {
    /// Whether this problem makes some invocation unresolvable.
    pub fn blocks_resolution(&self) -> bool {
        matches!(
            self,
            Diagnostic::MalformedTemplate { .. }
                | Diagnostic::UncoveredPlaceholder { .. }
                | Diagnostic::ConflictingBinding { .. }
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptyId => write!(f, "benchmark id is empty"),
            Diagnostic::DuplicateSpecId { id } => write!(f, "benchmark id `{id}` is declared more than once"),
            Diagnostic::DuplicateVariant { name } => write!(f, "variant `{name}` is declared more than once"),
            Diagnostic::EmptyVariantName => write!(f, "a variant has an empty name"),
            Diagnostic::EmptyBindingValue { variant, name } => {
                write!(f, "variant `{variant}` binds `{name}` to an empty value")
            }
            Diagnostic::EmptyParamDomain { param } => write!(f, "parameter `{param}` has no values"),
            Diagnostic::InvalidParamDomain { param, reason } => write!(f, "parameter `{param}`: {reason}"),
            Diagnostic::MalformedTemplate { field, reason } => write!(f, "malformed template in {field}: {reason}"),
            Diagnostic::UncoveredPlaceholder { name, variant } => {
                write!(f, "placeholder {{{name}}} has no binding for variant `{variant}`")
            }
            Diagnostic::ConflictingBinding { name, variant } => {
                write!(f, "`{name}` is bound by variant `{variant}` and also declared as a parameter")
            }
            Diagnostic::InvalidWallRange { low, high } => {
                write!(f, "expected_wall_range ({low}, {high}) must satisfy 0 < low < high")
            }
            Diagnostic::InvalidRunPolicy { reason } => write!(f, "run_policy: {reason}"),
            Diagnostic::IdenticalVariants { first, second } => write!(
                f,
                "variants `{first}` and `{second}` resolve to identical invocations at every parameter point; \
                 the comparison would measure the same program twice"
            ),
        }
    }
}

/// Collects every invariant violation of a spec. Empty iff well formed.
pub fn validate_spec(spec: &BenchmarkSpec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if spec.id.trim().is_empty() {
        diags.push(Diagnostic::EmptyId);
    }

    let mut names = BTreeSet::new();
    for v in &spec.variants {
        if v.name.trim().is_empty() {
            diags.push(Diagnostic::EmptyVariantName);
        } else if !names.insert(v.name.as_str()) {
            diags.push(Diagnostic::DuplicateVariant { name: v.name.clone() });
        }
        for (k, val) in &v.bindings {
            if val.is_empty() {
                diags.push(Diagnostic::EmptyBindingValue { variant: v.name.clone(), name: k.clone() });
            }
        }
    }

    for (name, domain) in &spec.params {
        match domain {
            ValueDomain::Values(v) if v.is_empty() => {
                diags.push(Diagnostic::EmptyParamDomain { param: name.clone() })
            }
            ValueDomain::Linear(g) | ValueDomain::Log(g) if g.count == 0 => {
                diags.push(Diagnostic::EmptyParamDomain { param: name.clone() })
            }
            ValueDomain::Log(g) if !(g.start > 0.0 && g.stop > 0.0) => diags.push(Diagnostic::InvalidParamDomain {
                param: name.clone(),
                reason: "log range bounds must be positive".into(),
            }),
            ValueDomain::Linear(g) | ValueDomain::Log(g) if !(g.start.is_finite() && g.stop.is_finite()) => {
                diags.push(Diagnostic::InvalidParamDomain { param: name.clone(), reason: "range bounds must be finite".into() })
            }
            _ => {}
        }
    }

    if let Some((low, high)) = spec.expected_wall_range {
        if !(0.0 < low && low < high) {
            diags.push(Diagnostic::InvalidWallRange { low, high });
        }
    }
    if let Some(reason) = spec.run_policy.problems() {
        diags.push(Diagnostic::InvalidRunPolicy { reason });
    }

    let mut templates: Vec<(String, &str)> = vec![("command_template".into(), spec.command_template.as_str())];
    templates.extend(spec.env_template.iter().map(|(k, v)| (format!("env_template.{k}"), v.as_str())));
    if let Some(c) = &spec.check_template {
        templates.push(("check_template".into(), c.as_str()));
    }
    let mut used = Vec::<String>::new();
    let mut malformed = false;
    for (field, text) in &templates {
        match placeholders(text) {
            Ok(p) => used.extend(p),
            Err(reason) => {
                malformed = true;
                diags.push(Diagnostic::MalformedTemplate { field: field.clone(), reason });
            }
        }
    }
    if !spec.shell {
        if let Err(e) = shell_words::split(&spec.command_template) {
            malformed = true;
            diags.push(Diagnostic::MalformedTemplate { field: "command_template".into(), reason: e.to_string() });
        }
    }
    used.sort();
    used.dedup();

    let variants = spec.effective_variants();
    for v in &variants {
        for name in v.bindings.keys() {
            if spec.params.contains_key(name) {
                diags.push(Diagnostic::ConflictingBinding { name: name.clone(), variant: v.name.clone() });
            }
        }
        for name in &used {
            if !spec.params.contains_key(name) && !v.bindings.contains_key(name) {
                diags.push(Diagnostic::UncoveredPlaceholder { name: name.clone(), variant: v.name.clone() });
            }
        }
    }

    let blocked = malformed || diags.iter().any(Diagnostic::blocks_resolution);
    if !blocked {
        diags.extend(identical_variants(spec));
    }
    diags
}

type Resolved = (Vec<String>, BTreeMap<String, String>);

/// Pairs of distinct variants whose invocations coincide at every point.
fn identical_variants(spec: &BenchmarkSpec) -> Vec<Diagnostic> {
    let points = spec.param_points();
    let variants = spec.effective_variants();
    let resolved: Vec<Option<Vec<Resolved>>> = variants
        .iter()
        .map(|v| {
            points
                .iter()
                .map(|p| resolve_invocation(spec, v, p).ok().map(|inv| (inv.argv, inv.env)))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..variants.len() {
        for j in (i + 1)..variants.len() {
            if variants[i].name == variants[j].name {
                continue;
            }
            if let (Some(a), Some(b)) = (&resolved[i], &resolved[j]) {
                if a == b {
                    out.push(Diagnostic::IdenticalVariants {
                        first: variants[i].name.clone(),
                        second: variants[j].name.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Diagnostics spanning several specs (currently only id uniqueness).
pub fn validate_project_specs(specs: &[BenchmarkSpec]) -> Vec<(String, Diagnostic)> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for s in specs {
        if !ids.insert(s.id.as_str()) {
            out.push((s.id.clone(), Diagnostic::DuplicateSpecId { id: s.id.clone() }));
        }
        out.extend(validate_spec(s).into_iter().map(|d| (s.id.clone(), d)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sort_spec() -> BenchmarkSpec {
        let mut spec = BenchmarkSpec::new("sort", "/tmp/bench.opt");
        spec.env_template.insert("IMPL".into(), "{impl}".into());
        spec.env_template.insert("SIZE".into(), "{size}".into());
        spec.params.insert("size".into(), ValueDomain::Values(vec!["10_000".into()]));
        spec.variants = vec![Variant::new("quicksort").bind("impl", "quicksort"), Variant::new("mergesort").bind("impl", "mergesort")];
        spec
    }

    fn point(pairs: &[(&str, &str)]) -> ParamPoint {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn resolves_env_from_variant_and_point() {
        let spec = sort_spec();
        let inv = resolve_invocation(&spec, &spec.variants[0], &point(&[("size", "10_000")])).unwrap();
        assert_eq!(inv.env.get("IMPL").unwrap(), "quicksort");
        assert_eq!(inv.env.get("SIZE").unwrap(), "10_000");
        assert_eq!(inv.argv, vec!["/tmp/bench.opt"]);
    }

    #[test]
    fn zero_placeholders_is_identity() {
        let spec = BenchmarkSpec::new("noop", "true --flag 'a b'");
        let inv = resolve_invocation(&spec, &Variant::new(DEFAULT_VARIANT), &ParamPoint::new()).unwrap();
        assert_eq!(inv.argv, vec!["true", "--flag", "a b"]);
        assert!(inv.env.is_empty());
    }

    #[test]
    fn unbound_placeholder() {
        let spec = BenchmarkSpec::new("x", "{impl}");
        let err = resolve_invocation(&spec, &Variant::new(DEFAULT_VARIANT), &ParamPoint::new()).unwrap_err();
        assert!(matches!(err, ResolveError::UnboundPlaceholder { ref name, .. } if name == "impl"));
    }

    #[test]
    fn conflicting_binding_is_an_error() {
        let mut spec = BenchmarkSpec::new("x", "prog {size}");
        spec.params.insert("size".into(), ValueDomain::Values(vec!["1".into()]));
        spec.variants = vec![Variant::new("a").bind("size", "2")];
        let err = resolve_invocation(&spec, &spec.variants[0], &point(&[("size", "1")])).unwrap_err();
        assert!(matches!(err, ResolveError::ConflictingBinding { .. }));
        assert!(validate_spec(&spec).iter().any(|d| matches!(d, Diagnostic::ConflictingBinding { .. })));
    }

    #[test]
    fn doubled_braces_are_literal() {
        let spec = BenchmarkSpec::new("x", "echo {{literal}} {v}");
        let v = Variant::new("a").bind("v", "1");
        let mut spec = spec;
        spec.variants = vec![v.clone()];
        let inv = resolve_invocation(&spec, &v, &ParamPoint::new()).unwrap();
        assert_eq!(inv.argv, vec!["echo", "{literal}", "1"]);
    }

    #[test]
    fn leading_assignments_become_env() {
        let mut spec = BenchmarkSpec::new("sort", "IMPL={impl} NITERS=100 SIZE=10_000 /tmp/bench.opt");
        spec.variants = vec![Variant::new("quicksort").bind("impl", "quicksort")];
        let inv = resolve_invocation(&spec, &spec.variants[0], &ParamPoint::new()).unwrap();
        assert_eq!(inv.argv, vec!["/tmp/bench.opt"]);
        assert_eq!(inv.env.get("IMPL").unwrap(), "quicksort");
        assert_eq!(inv.env.get("NITERS").unwrap(), "100");
    }

    #[test]
    fn shell_mode_wraps_command() {
        let mut spec = BenchmarkSpec::new("x", "echo {v} | wc -c");
        spec.shell = true;
        spec.variants = vec![Variant::new("a").bind("v", "hi")];
        let inv = resolve_invocation(&spec, &spec.variants[0], &ParamPoint::new()).unwrap();
        assert_eq!(inv.argv, vec!["sh", "-c", "echo hi | wc -c"]);
    }

    #[test]
    fn malformed_templates() {
        assert!(placeholders("{unterminated").is_err());
        assert!(placeholders("stray }").is_err());
        assert!(placeholders("{}").is_err());
        assert!(placeholders("{a b}").is_err());
        assert_eq!(placeholders("{a}{b}{a}").unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn well_formed_spec_has_no_diagnostics() {
        assert_eq!(validate_spec(&sort_spec()), vec![]);
    }

    #[test]
    fn duplicate_variant_names() {
        let mut spec = sort_spec();
        spec.variants[1].name = "quicksort".into();
        let diags = validate_spec(&spec);
        let dups = diags.iter().filter(|d| matches!(d, Diagnostic::DuplicateVariant { .. })).count();
        assert_eq!(dups, 1, "{diags:?}");
    }

    #[test]
    fn identical_variants_detected() {
        let mut spec = sort_spec();
        spec.variants[1].bindings.insert("impl".into(), "quicksort".into());
        let diags = validate_spec(&spec);
        assert_eq!(
            diags,
            vec![Diagnostic::IdenticalVariants { first: "quicksort".into(), second: "mergesort".into() }]
        );
    }

    #[test]
    fn bindings_unused_by_templates_make_variants_identical() {
        let mut spec = BenchmarkSpec::new("x", "prog");
        spec.variants = vec![Variant::new("a").bind("impl", "a"), Variant::new("b").bind("impl", "b")];
        assert!(validate_spec(&spec).iter().any(|d| matches!(d, Diagnostic::IdenticalVariants { .. })));
    }

    #[test]
    fn other_diagnostics() {
        let mut spec = sort_spec();
        spec.id = " ".into();
        spec.params.insert("empty".into(), ValueDomain::Values(vec![]));
        spec.expected_wall_range = Some((3.0, 1.0));
        spec.run_policy = RunPolicy::adaptive(20, 1.0, 10);
        spec.env_template.insert("X".into(), "{nope}".into());
        let diags = validate_spec(&spec);
        assert!(diags.contains(&Diagnostic::EmptyId));
        assert!(diags.contains(&Diagnostic::EmptyParamDomain { param: "empty".into() }));
        assert!(diags.contains(&Diagnostic::InvalidWallRange { low: 3.0, high: 1.0 }));
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::InvalidRunPolicy { .. })));
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::UncoveredPlaceholder { name, .. } if name == "nope")));
    }

    #[test]
    fn log_generator_points() {
        let g = RangeGenerator { start: 1e3, stop: 1e6, count: 4 };
        assert_eq!(g.log_points(), vec![1e3, 1e4, 1e5, 1e6]);
        assert_eq!(ValueDomain::Log(g).text_values(), vec!["1000", "10000", "100000", "1000000"]);
        let l = RangeGenerator { start: 0.0, stop: 1.0, count: 3 };
        assert_eq!(l.linear_points(), vec![0.0, 0.5, 1.0]);
        assert_eq!(ValueDomain::Linear(l).text_values(), vec!["0", "0.5", "1"]);
    }

    #[test]
    fn param_point_product() {
        let mut spec = BenchmarkSpec::new("x", "p {a} {b}");
        spec.params.insert("a".into(), ValueDomain::Values(vec!["1".into(), "2".into()]));
        spec.params.insert("b".into(), ValueDomain::Values(vec!["x".into(), "y".into(), "z".into()]));
        let pts = spec.param_points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], point(&[("a", "1"), ("b", "x")]));
        assert!(spec.params.is_empty() || !pts.is_empty());
    }

    #[test]
    fn toml_round_trip_and_strictness() {
        let text = r#"
            id = "sort"
            command_template = "/tmp/bench.opt"
            env_template = { IMPL = "{impl}", SIZE = "{size}" }
            params = { size = { values = [1000, "10_000"] }, n = { log = { start = 10.0, stop = 1000.0, count = 3 } } }
            run_policy = { mode = "fixed", fixed_runs = 5 }
            expected_wall_range = [1.0, 3.0]
            tags = ["micro"]
            [[variants]]
            name = "quicksort"
            bindings = { impl = "quicksort" }
        "#;
        let spec: BenchmarkSpec = toml::from_str(text).unwrap();
        assert_eq!(spec.params["size"], ValueDomain::Values(vec!["1000".into(), "10_000".into()]));
        assert_eq!(spec.run_policy.fixed_runs, 5);
        assert_eq!(spec.run_policy.mode, RunMode::Fixed);
        assert!(spec.enabled);
        let back: BenchmarkSpec = toml::from_str(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);

        let bad = format!("{text}\nbogus = 1\n");
        assert!(toml::from_str::<BenchmarkSpec>(&bad).is_err());
    }

    #[test]
    fn run_policy_counts() {
        let fixed = RunPolicy::fixed(3);
        assert!(fixed.wants_more(2, 100.0));
        assert!(!fixed.wants_more(3, 0.0));
        let ad = RunPolicy::adaptive(10, 3.0, 100);
        assert!(ad.wants_more(9, 10.0));
        assert!(!ad.wants_more(10, 6.0));
        assert!(ad.wants_more(10, 2.9));
        assert!(!ad.wants_more(100, 0.0));
    }
}
