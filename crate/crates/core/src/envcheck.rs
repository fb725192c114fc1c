//! Machine-state fingerprints and environment warnings.
//!
//! Capture is best effort: anything the operating system does not expose
//! is recorded as unknown (`None`), never guessed.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvironmentFingerprint {
    pub fingerprint_id: String,
    pub cpu_model: String,
    pub governor: Option<String>,
    pub frequency_fixed: Option<bool>,
    pub turbo_enabled: Option<bool>,
    pub on_ac_power: Option<bool>,
    pub os_descriptor: String,
    pub tool_version: String,
    /// Not part of the hash.
    pub captured_at: String,
}

#[derive(Serialize)]
struct HashedFields<'a> {
    cpu_model: &'a str,
    governor: &'a Option<String>,
    frequency_fixed: Option<bool>,
    turbo_enabled: Option<bool>,
    on_ac_power: Option<bool>,
    os_descriptor: &'a str,
    tool_version: &'a str,
}

impl EnvironmentFingerprint {
    /// Builds a fingerprint and computes its id from the hashed fields.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cpu_model: String,
        governor: Option<String>,
        frequency_fixed: Option<bool>,
        turbo_enabled: Option<bool>,
        on_ac_power: Option<bool>,
        os_descriptor: String,
        tool_version: String,
        captured_at: String,
    ) -> Self {
        let mut fp = EnvironmentFingerprint {
            fingerprint_id: String::new(),
            cpu_model,
            governor,
            frequency_fixed,
            turbo_enabled,
            on_ac_power,
            os_descriptor,
            tool_version,
            captured_at,
        };
        fp.fingerprint_id = fp.compute_id();
        fp
    }

    pub fn compute_id(&self) -> String {
        let fields = HashedFields {
            cpu_model: &self.cpu_model,
            governor: &self.governor,
            frequency_fixed: self.frequency_fixed,
            turbo_enabled: self.turbo_enabled,
            on_ac_power: self.on_ac_power,
            os_descriptor: &self.os_descriptor,
            tool_version: &self.tool_version,
        };
        let bytes = serde_json::to_vec(&fields).expect("fingerprint fields serialize");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    /// Recomputes the id, e.g. after editing a field.
    pub fn rehash(mut self) -> Self {
        self.fingerprint_id = self.compute_id();
        self
    }
}

fn read_trimmed(path: &Path) -> Option<String> {
    fs::read_to_string(path).ok().map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

fn cpu_dirs(root: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root.join("sys/devices/system/cpu"))
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_prefix("cpu"))
                .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
        })
        .filter(|p| p.join("cpufreq").is_dir())
        .collect();
    dirs.sort();
    dirs
}

fn read_cpu_model(root: &Path) -> Option<String> {
    let text = fs::read_to_string(root.join("proc/cpuinfo")).ok()?;
    ["model name", "Hardware", "cpu model", "Processor"].iter().find_map(|key| {
        text.lines().find_map(|line| {
            let (k, v) = line.split_once(':')?;
            (k.trim() == *key && !v.trim().is_empty()).then(|| v.trim().to_string())
        })
    })
}

fn read_governor(cpus: &[PathBuf]) -> Option<String> {
    let mut govs: Vec<String> = cpus.iter().filter_map(|c| read_trimmed(&c.join("cpufreq/scaling_governor"))).collect();
    if govs.is_empty() {
        return None;
    }
    govs.sort();
    govs.dedup();
    Some(if govs.len() == 1 { govs.remove(0) } else { format!("mixed({})", govs.join(",")) })
}

/// Fixed iff every CPU's frequency bounds coincide (or the userspace
/// governor pins it); unknown when no bounds are exposed.
fn read_frequency_fixed(cpus: &[PathBuf], governor: Option<&str>) -> Option<bool> {
    let mut seen = false;
    let mut all_fixed = true;
    for cpu in cpus {
        let min = read_trimmed(&cpu.join("cpufreq/scaling_min_freq"));
        let max = read_trimmed(&cpu.join("cpufreq/scaling_max_freq"));
        if let (Some(lo), Some(hi)) = (min, max) {
            seen = true;
            all_fixed &= lo == hi;
        }
    }
    if governor == Some("userspace") {
        return Some(true);
    }
    seen.then_some(all_fixed)
}

fn read_turbo(root: &Path) -> Option<bool> {
    let cpu = root.join("sys/devices/system/cpu");
    if let Some(v) = read_trimmed(&cpu.join("intel_pstate/no_turbo")) {
        return Some(v == "0");
    }
    read_trimmed(&cpu.join("cpufreq/boost")).map(|v| v == "1")
}

fn read_ac_power(root: &Path) -> Option<bool> {
    let dir = root.join("sys/class/power_supply");
    let mut mains: Option<bool> = None;
    let mut battery_discharging: Option<bool> = None;
    for entry in fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = entry.path();
        match read_trimmed(&p.join("type")).as_deref() {
            Some("Mains") | Some("USB") => {
                if let Some(online) = read_trimmed(&p.join("online")) {
                    mains = Some(mains.unwrap_or(false) || online == "1");
                }
            }
            Some("Battery") => {
                if let Some(status) = read_trimmed(&p.join("status")) {
                    battery_discharging = Some(battery_discharging.unwrap_or(false) || status == "Discharging");
                }
            }
            _ => {}
        }
    }
    mains.or(battery_discharging.map(|d| !d))
}

fn read_os(root: &Path) -> String {
    let pretty = fs::read_to_string(root.join("etc/os-release")).ok().and_then(|t| {
        t.lines().find_map(|l| l.strip_prefix("PRETTY_NAME=").map(|v| v.trim_matches('"').to_string()))
    });
    let kernel = read_trimmed(&root.join("proc/sys/kernel/osrelease"));
    let mut parts = vec![std::env::consts::OS.to_string()];
    parts.extend(pretty);
    parts.extend(kernel);
    parts.join(" ")
}

/// Captures the fingerprint of the machine running this process.
pub fn capture_fingerprint() -> EnvironmentFingerprint {
    capture_fingerprint_from(Path::new("/"))
}

/// Captures a fingerprint reading `proc`, `sys` and `etc` below `root`.
pub fn capture_fingerprint_from(root: &Path) -> EnvironmentFingerprint {
    let cpus = cpu_dirs(root);
    let governor = read_governor(&cpus);
    let frequency_fixed = read_frequency_fixed(&cpus, governor.as_deref());
    EnvironmentFingerprint::new(
        read_cpu_model(root).unwrap_or_else(|| format!("unknown {}", std::env::consts::ARCH)),
        governor,
        frequency_fixed,
        read_turbo(root),
        read_ac_power(root),
        read_os(root),
        env!("CARGO_PKG_VERSION").to_string(),
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvWarning {
    GovernorNotFixed { governor: Option<String> },
    TurboEnabled,
    OnBattery,
    Unknown { field: String },
}

impl EnvWarning {
    /// Unknown notes are informational; everything else is a real warning.
    pub fn is_hard(&self) -> bool {
        !matches!(self, EnvWarning::Unknown { .. })
    }
}

impl fmt::Display for EnvWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvWarning::GovernorNotFixed { governor } => write!(
                f,
                "CPU frequency is not fixed (governor: {}); frequency scaling adds noise, consider pinning a medium-low frequency",
                governor.as_deref().unwrap_or("unknown")
            ),
            EnvWarning::TurboEnabled => write!(f, "turbo/boost mode is enabled; consider disabling it while benchmarking"),
            EnvWarning::OnBattery => write!(f, "running on battery; plug in to a power source"),
            EnvWarning::Unknown { field } => write!(f, "could not determine {field}"),
        }
    }
}

pub fn check_environment(fp: &EnvironmentFingerprint) -> Vec<EnvWarning> {
    let mut out = Vec::new();
    match fp.frequency_fixed {
        Some(false) => out.push(EnvWarning::GovernorNotFixed { governor: fp.governor.clone() }),
        Some(true) => {}
        None => out.push(EnvWarning::Unknown { field: "frequency_fixed".into() }),
    }
    match fp.turbo_enabled {
        Some(true) => out.push(EnvWarning::TurboEnabled),
        Some(false) => {}
        None => out.push(EnvWarning::Unknown { field: "turbo_enabled".into() }),
    }
    match fp.on_ac_power {
        Some(false) => out.push(EnvWarning::OnBattery),
        Some(true) => {}
        None => out.push(EnvWarning::Unknown { field: "on_ac_power".into() }),
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    Differs,
    /// One side is known, the other unknown.
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMismatch {
    pub field: String,
    pub kind: MismatchKind,
    pub a: Option<String>,
    pub b: Option<String>,
}

impl fmt::Display for FieldMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<String>| v.clone().unwrap_or_else(|| "unknown".into());
        match self.kind {
            MismatchKind::Differs => write!(f, "{}: {} vs {}", self.field, show(&self.a), show(&self.b)),
            MismatchKind::Unverifiable => {
                write!(f, "{}: unverifiable ({} vs {})", self.field, show(&self.a), show(&self.b))
            }
        }
    }
}

fn opt_text<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

pub fn diff_fingerprints(a: &EnvironmentFingerprint, b: &EnvironmentFingerprint) -> Vec<FieldMismatch> {
    let fields: [(&str, Option<String>, Option<String>); 7] = [
        ("cpu_model", Some(a.cpu_model.clone()), Some(b.cpu_model.clone())),
        ("governor", a.governor.clone(), b.governor.clone()),
        ("frequency_fixed", opt_text(&a.frequency_fixed), opt_text(&b.frequency_fixed)),
        ("turbo_enabled", opt_text(&a.turbo_enabled), opt_text(&b.turbo_enabled)),
        ("on_ac_power", opt_text(&a.on_ac_power), opt_text(&b.on_ac_power)),
        ("os_descriptor", Some(a.os_descriptor.clone()), Some(b.os_descriptor.clone())),
        ("tool_version", Some(a.tool_version.clone()), Some(b.tool_version.clone())),
    ];
    fields
        .into_iter()
        .filter_map(|(field, x, y)| {
            let kind = match (&x, &y) {
                (Some(p), Some(q)) if p == q => return None,
                (None, None) => return None,
                (Some(_), Some(_)) => MismatchKind::Differs,
                _ => MismatchKind::Unverifiable,
            };
            Some(FieldMismatch { field: field.to_string(), kind, a: x, b: y })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(root: &Path, rel: &str, content: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    fn laptop(root: &Path, plugged: bool) {
        write(root, "proc/cpuinfo", "processor\t: 0\nmodel name\t: Test CPU @ 2.00GHz\n");
        for cpu in ["cpu0", "cpu1"] {
            write(root, &format!("sys/devices/system/cpu/{cpu}/cpufreq/scaling_governor"), "powersave\n");
            write(root, &format!("sys/devices/system/cpu/{cpu}/cpufreq/scaling_min_freq"), "800000\n");
            write(root, &format!("sys/devices/system/cpu/{cpu}/cpufreq/scaling_max_freq"), "3400000\n");
        }
        write(root, "sys/devices/system/cpu/intel_pstate/no_turbo", "0\n");
        write(root, "sys/class/power_supply/AC/type", "Mains\n");
        write(root, "sys/class/power_supply/AC/online", if plugged { "1\n" } else { "0\n" });
        write(root, "etc/os-release", "PRETTY_NAME=\"Test OS 1\"\n");
    }

    fn fp(freq: Option<bool>, turbo: Option<bool>, ac: Option<bool>) -> EnvironmentFingerprint {
        EnvironmentFingerprint::new("cpu".into(), None, freq, turbo, ac, "os".into(), "1".into(), "t".into())
    }

    #[test]
    fn capture_from_fake_tree() {
        let dir = tempfile::tempdir().unwrap();
        laptop(dir.path(), true);
        let a = capture_fingerprint_from(dir.path());
        assert_eq!(a.cpu_model, "Test CPU @ 2.00GHz");
        assert_eq!(a.governor.as_deref(), Some("powersave"));
        assert_eq!(a.frequency_fixed, Some(false));
        assert_eq!(a.turbo_enabled, Some(true));
        assert_eq!(a.on_ac_power, Some(true));
        assert!(a.os_descriptor.contains("Test OS 1"));

        let b = capture_fingerprint_from(dir.path());
        assert_eq!(a.fingerprint_id, b.fingerprint_id);

        write(dir.path(), "sys/class/power_supply/AC/online", "0\n");
        let c = capture_fingerprint_from(dir.path());
        assert_eq!(c.on_ac_power, Some(false));
        assert_ne!(a.fingerprint_id, c.fingerprint_id);
        assert_eq!(
            diff_fingerprints(&a, &c).into_iter().map(|m| m.field).collect::<Vec<_>>(),
            vec!["on_ac_power"]
        );
    }

    #[test]
    fn empty_tree_degrades_to_unknown() {
        let dir = tempfile::tempdir().unwrap();
        let fp = capture_fingerprint_from(dir.path());
        assert_eq!(fp.governor, None);
        assert_eq!(fp.frequency_fixed, None);
        assert_eq!(fp.turbo_enabled, None);
        assert_eq!(fp.on_ac_power, None);
        let warnings = check_environment(&fp);
        assert_eq!(warnings.len(), 3);
        assert!(warnings.iter().all(|w| !w.is_hard()));
    }

    #[test]
    fn battery_only_machine() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "sys/class/power_supply/BAT0/type", "Battery\n");
        write(dir.path(), "sys/class/power_supply/BAT0/status", "Discharging\n");
        assert_eq!(capture_fingerprint_from(dir.path()).on_ac_power, Some(false));
    }

    #[test]
    fn timestamp_excluded_from_hash() {
        let mut a = fp(Some(true), Some(false), Some(true));
        let id = a.fingerprint_id.clone();
        a.captured_at = "later".into();
        assert_eq!(a.compute_id(), id);
    }

    #[test]
    fn environment_warnings() {
        assert!(check_environment(&fp(Some(true), Some(false), Some(true))).is_empty());
        assert_eq!(check_environment(&fp(Some(true), Some(false), Some(false))), vec![EnvWarning::OnBattery]);
        let w = check_environment(&fp(Some(false), Some(true), Some(true)));
        assert_eq!(w, vec![EnvWarning::GovernorNotFixed { governor: None }, EnvWarning::TurboEnabled]);
    }

    #[test]
    fn diff_cases() {
        let a = fp(Some(true), None, Some(true));
        assert!(diff_fingerprints(&a, &a).is_empty());
        let mut b = fp(Some(true), Some(false), Some(true));
        let d = diff_fingerprints(&a, &b);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "turbo_enabled");
        assert_eq!(d[0].kind, MismatchKind::Unverifiable);
        b.governor = Some("performance".into());
        let mut c = a.clone();
        c.governor = Some("powersave".into());
        let fields: Vec<_> = diff_fingerprints(&b, &c).into_iter().map(|m| (m.field, m.kind)).collect();
        assert!(fields.contains(&("governor".to_string(), MismatchKind::Differs)));
    }
}
