//! Industry-style vulnerability scoring for measured attack results.
//!
//! Implements the CVSS v3.0 base-metric model: vector-string parsing and
//! canonical rendering, the published base-score equations with round-up
//! to one decimal, severity banding, and a documented mapping from
//! empirical attack reports onto metric values so a measured robustness
//! gap can be filed and triaged like any other vulnerability.
//!
//! The v3.0 equations (not v3.1) are pinned deliberately: scores are
//! checked against the public v3.0 reference calculator. The round-up
//! here — `ceil(x · 10) / 10` on the raw score, computed in the reference
//! calculator's operation order — was verified to agree with exact
//! rational arithmetic on all 2592 metric combinations, so no
//! floating-point workaround is needed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attack::AttackReport;
use crate::error::Error;

/// How the attacker reaches the component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackVector {
    Network,
    Adjacent,
    Local,
    Physical,
}

/// Conditions beyond the attacker's control that must hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackComplexity {
    Low,
    High,
}

/// Privilege level the attacker needs before the attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivilegesRequired {
    None,
    Low,
    High,
}

/// Whether a user other than the attacker must participate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserInteraction {
    None,
    Required,
}

/// Whether the exploit escapes the vulnerable component's authority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Unchanged,
    Changed,
}

/// Degree of loss for one of confidentiality, integrity, availability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactLevel {
    None,
    Low,
    High,
}

impl AttackVector {
    fn code(self) -> &'static str {
        match self {
            AttackVector::Network => "N",
            AttackVector::Adjacent => "A",
            AttackVector::Local => "L",
            AttackVector::Physical => "P",
        }
    }
    fn weight(self) -> f64 {
        match self {
            AttackVector::Network => 0.85,
            AttackVector::Adjacent => 0.62,
            AttackVector::Local => 0.55,
            AttackVector::Physical => 0.2,
        }
    }
}

impl AttackComplexity {
    fn code(self) -> &'static str {
        match self {
            AttackComplexity::Low => "L",
            AttackComplexity::High => "H",
        }
    }
    fn weight(self) -> f64 {
        match self {
            AttackComplexity::Low => 0.77,
            AttackComplexity::High => 0.44,
        }
    }
}

impl PrivilegesRequired {
    fn code(self) -> &'static str {
        match self {
            PrivilegesRequired::None => "N",
            PrivilegesRequired::Low => "L",
            PrivilegesRequired::High => "H",
        }
    }
    /// Weight; Low and High are worth more when scope changes.
    fn weight(self, scope: Scope) -> f64 {
        match (self, scope) {
            (PrivilegesRequired::None, _) => 0.85,
            (PrivilegesRequired::Low, Scope::Unchanged) => 0.62,
            (PrivilegesRequired::Low, Scope::Changed) => 0.68,
            (PrivilegesRequired::High, Scope::Unchanged) => 0.27,
            (PrivilegesRequired::High, Scope::Changed) => 0.50,
        }
    }
}

impl UserInteraction {
    fn code(self) -> &'static str {
        match self {
            UserInteraction::None => "N",
            UserInteraction::Required => "R",
        }
    }
    fn weight(self) -> f64 {
        match self {
            UserInteraction::None => 0.85,
            UserInteraction::Required => 0.62,
        }
    }
}

impl Scope {
    fn code(self) -> &'static str {
        match self {
            Scope::Unchanged => "U",
            Scope::Changed => "C",
        }
    }
}

impl ImpactLevel {
    fn code(self) -> &'static str {
        match self {
            ImpactLevel::None => "N",
            ImpactLevel::Low => "L",
            ImpactLevel::High => "H",
        }
    }
    fn weight(self) -> f64 {
        match self {
            ImpactLevel::None => 0.0,
            ImpactLevel::Low => 0.22,
            ImpactLevel::High => 0.56,
        }
    }
}

/// The eight required base metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseMetrics {
    pub attack_vector: AttackVector,
    pub attack_complexity: AttackComplexity,
    pub privileges_required: PrivilegesRequired,
    pub user_interaction: UserInteraction,
    pub scope: Scope,
    pub confidentiality: ImpactLevel,
    pub integrity: ImpactLevel,
    pub availability: ImpactLevel,
}

impl BaseMetrics {
    /// Canonical vector string: fixed prefix and metric order.
    pub fn vector(&self) -> String {
        format!(
            "CVSS:3.0/AV:{}/AC:{}/PR:{}/UI:{}/S:{}/C:{}/I:{}/A:{}",
            self.attack_vector.code(),
            self.attack_complexity.code(),
            self.privileges_required.code(),
            self.user_interaction.code(),
            self.scope.code(),
            self.confidentiality.code(),
            self.integrity.code(),
            self.availability.code(),
        )
    }
}

/// Why a vector string failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VectorParseError {
    /// The string does not start with the required `CVSS:3.0/` prefix.
    BadPrefix,
    /// A required metric never appeared.
    MissingMetric(&'static str),
    /// A metric appeared more than once.
    DuplicateMetric(&'static str),
    /// A segment is not a recognized `METRIC:CODE` pair (codes are
    /// case-sensitive).
    UnknownCode(String),
}

impl fmt::Display for VectorParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorParseError::BadPrefix => {
                write!(f, "vector must start with \"CVSS:3.0/\"")
            }
            VectorParseError::MissingMetric(m) => write!(f, "missing metric {m}"),
            VectorParseError::DuplicateMetric(m) => write!(f, "duplicate metric {m}"),
            VectorParseError::UnknownCode(seg) => write!(f, "unknown metric code {seg:?}"),
        }
    }
}

impl std::error::Error for VectorParseError {}

impl From<VectorParseError> for Error {
    fn from(e: VectorParseError) -> Self {
        Error::Malformed(format!("vector string: {e}"))
    }
}

/// Parses a v3.0 vector string. The prefix is fixed; the eight metric
/// groups may come in any order but each must appear exactly once, with
/// exactly the upper-case codes of the published v3.0 standard.
pub fn parse_vector(s: &str) -> Result<BaseMetrics, VectorParseError> {
    let rest = s.strip_prefix("CVSS:3.0/").ok_or(VectorParseError::BadPrefix)?;

    let mut av = None;
    let mut ac = None;
    let mut pr = None;
    let mut ui = None;
    let mut scope = None;
    let mut conf = None;
    let mut integ = None;
    let mut avail = None;

    for segment in rest.split('/') {
        let unknown = || VectorParseError::UnknownCode(segment.to_string());
        let (key, code) = segment.split_once(':').ok_or_else(unknown)?;

        fn put<T>(
            slot: &mut Option<T>,
            value: T,
            name: &'static str,
        ) -> Result<(), VectorParseError> {
            if slot.is_some() {
                return Err(VectorParseError::DuplicateMetric(name));
            }
            *slot = Some(value);
            Ok(())
        }

        match key {
            "AV" => put(
                &mut av,
                match code {
                    "N" => AttackVector::Network,
                    "A" => AttackVector::Adjacent,
                    "L" => AttackVector::Local,
                    "P" => AttackVector::Physical,
                    _ => return Err(unknown()),
                },
                "AV",
            )?,
            "AC" => put(
                &mut ac,
                match code {
                    "L" => AttackComplexity::Low,
                    "H" => AttackComplexity::High,
                    _ => return Err(unknown()),
                },
                "AC",
            )?,
            "PR" => put(
                &mut pr,
                match code {
                    "N" => PrivilegesRequired::None,
                    "L" => PrivilegesRequired::Low,
                    "H" => PrivilegesRequired::High,
                    _ => return Err(unknown()),
                },
                "PR",
            )?,
            "UI" => put(
                &mut ui,
                match code {
                    "N" => UserInteraction::None,
                    "R" => UserInteraction::Required,
                    _ => return Err(unknown()),
                },
                "UI",
            )?,
            "S" => put(
                &mut scope,
                match code {
                    "U" => Scope::Unchanged,
                    "C" => Scope::Changed,
                    _ => return Err(unknown()),
                },
                "S",
            )?,
            "C" | "I" | "A" => {
                let level = match code {
                    "N" => ImpactLevel::None,
                    "L" => ImpactLevel::Low,
                    "H" => ImpactLevel::High,
                    _ => return Err(unknown()),
                };
                match key {
                    "C" => put(&mut conf, level, "C")?,
                    "I" => put(&mut integ, level, "I")?,
                    _ => put(&mut avail, level, "A")?,
                }
            }
            _ => return Err(unknown()),
        }
    }

    Ok(BaseMetrics {
        attack_vector: av.ok_or(VectorParseError::MissingMetric("AV"))?,
        attack_complexity: ac.ok_or(VectorParseError::MissingMetric("AC"))?,
        privileges_required: pr.ok_or(VectorParseError::MissingMetric("PR"))?,
        user_interaction: ui.ok_or(VectorParseError::MissingMetric("UI"))?,
        scope: scope.ok_or(VectorParseError::MissingMetric("S"))?,
        confidentiality: conf.ok_or(VectorParseError::MissingMetric("C"))?,
        integrity: integ.ok_or(VectorParseError::MissingMetric("I"))?,
        availability: avail.ok_or(VectorParseError::MissingMetric("A"))?,
    })
}

/// Severity band of a one-decimal base score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    None,
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    /// Banding on the one-decimal score: 0.0 None, 0.1–3.9 Low,
    /// 4.0–6.9 Medium, 7.0–8.9 High, 9.0–10.0 Critical.
    pub fn from_score(score: f64) -> Severity {
        let tenths = (score * 10.0).round() as i64;
        match tenths {
            0 => Severity::None,
            1..=39 => Severity::Low,
            40..=69 => Severity::Medium,
            70..=89 => Severity::High,
            _ => Severity::Critical,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Severity::None => "None",
            Severity::Low => "Low",
            Severity::Medium => "Medium",
            Severity::High => "High",
            Severity::Critical => "Critical",
        }
    }
}

/// A computed base score with its sub-scores and canonical vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreReport {
    /// One-decimal score in 0.0–10.0.
    pub base_score: f64,
    /// Raw exploitability sub-score (unrounded).
    pub exploitability_sub: f64,
    /// Raw impact sub-score (unrounded; at most 0 exactly when all three
    /// impact metrics are None, which forces a 0.0 base score).
    pub impact_sub: f64,
    pub severity: Severity,
    /// Canonical vector string for the scored metrics.
    pub vector: String,
}

/// Round up to one decimal: smallest one-decimal value ≥ `raw`.
fn round_up_1(raw: f64) -> f64 {
    (raw * 10.0).ceil() / 10.0
}

/// Computes the v3.0 base score.
pub fn base_score(m: &BaseMetrics) -> ScoreReport {
    let iss = 1.0
        - ((1.0 - m.confidentiality.weight())
            * (1.0 - m.integrity.weight())
            * (1.0 - m.availability.weight()));
    let impact = match m.scope {
        Scope::Unchanged => 6.42 * iss,
        Scope::Changed => 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02).powf(15.0),
    };
    let exploitability = 8.22
        * m.attack_vector.weight()
        * m.attack_complexity.weight()
        * m.privileges_required.weight(m.scope)
        * m.user_interaction.weight();

    let score = if impact <= 0.0 {
        0.0
    } else {
        match m.scope {
            Scope::Unchanged => round_up_1((impact + exploitability).min(10.0)),
            Scope::Changed => round_up_1((1.08 * (impact + exploitability)).min(10.0)),
        }
    };

    ScoreReport {
        base_score: score,
        exploitability_sub: exploitability,
        impact_sub: impact,
        severity: Severity::from_score(score),
        vector: m.vector(),
    }
}

/// Attacker knowledge assumed when scoring a measured attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatModel {
    /// Full access to the victim model's parameters and gradients.
    WhiteBox,
    /// Attacker crafts on surrogates; carries the measured mean
    /// off-diagonal transfer rate in percent (0–100).
    BlackBoxTransfer { mean_transfer_rate: f64 },
}

impl ThreatModel {
    fn name(&self) -> &'static str {
        match self {
            ThreatModel::WhiteBox => "white_box",
            ThreatModel::BlackBoxTransfer { .. } => "black_box_transfer",
        }
    }
}

/// Thresholds of the report-to-metrics mapping, as fractions of 1 for
/// success rates and percent for transfer rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingThresholds {
    /// Success rate at or above which integrity impact is High.
    pub high_success: f64,
    /// Success rate at or above which integrity impact is Low.
    pub low_success: f64,
    /// Mean transfer rate (percent) at or above which a black-box attack
    /// counts as low-complexity.
    pub easy_transfer: f64,
}

impl Default for MappingThresholds {
    fn default() -> Self {
        Self {
            high_success: 0.5,
            low_success: 0.1,
            easy_transfer: 50.0,
        }
    }
}

/// Maps a measured attack report onto base metrics with the default
/// thresholds. See [`map_evaluation_with`] for the full table.
pub fn map_evaluation_to_metrics(report: &AttackReport, threat: &ThreatModel) -> BaseMetrics {
    map_evaluation_with(report, threat, &MappingThresholds::default())
}

/// The documented mapping table.
///
/// Fixed assumptions: the model serves behind a network API (`AV:N`), no
/// human needs to participate (`UI:N`), and a misclassification stays
/// within the model's own authority (`S:U`). The attack corrupts outputs
/// rather than leaking data or crashing the service, so confidentiality
/// and availability are `None` and the success rate drives integrity:
/// `I:H` at or above `high_success`, `I:L` at or above `low_success`,
/// else `I:N`. White-box access is a high privilege (`PR:H`) with
/// straightforward crafting (`AC:L`); black-box transfer needs no
/// privileges (`PR:N`) and is low-complexity only when the mean transfer
/// rate reaches `easy_transfer` percent.
pub fn map_evaluation_with(
    report: &AttackReport,
    threat: &ThreatModel,
    thresholds: &MappingThresholds,
) -> BaseMetrics {
    let (privileges_required, attack_complexity) = match threat {
        ThreatModel::WhiteBox => (PrivilegesRequired::High, AttackComplexity::Low),
        ThreatModel::BlackBoxTransfer { mean_transfer_rate } => (
            PrivilegesRequired::None,
            if *mean_transfer_rate >= thresholds.easy_transfer {
                AttackComplexity::Low
            } else {
                AttackComplexity::High
            },
        ),
    };
    let integrity = if report.success_rate >= thresholds.high_success {
        ImpactLevel::High
    } else if report.success_rate >= thresholds.low_success {
        ImpactLevel::Low
    } else {
        ImpactLevel::None
    };
    BaseMetrics {
        attack_vector: AttackVector::Network,
        attack_complexity,
        privileges_required,
        user_interaction: UserInteraction::None,
        scope: Scope::Unchanged,
        confidentiality: ImpactLevel::None,
        integrity,
        availability: ImpactLevel::None,
    }
}

/// One scored finding: a measured attack plus its derived severity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlVulnRecord {
    pub title: String,
    pub threat_model: ThreatModel,
    pub attack_name: String,
    pub report: AttackReport,
    pub metrics: BaseMetrics,
    pub score: ScoreReport,
    pub narrative: String,
}

impl MlVulnRecord {
    /// Builds a record, deriving metrics and score from the report and
    /// threat model with the default mapping thresholds.
    pub fn new(
        title: impl Into<String>,
        threat_model: ThreatModel,
        report: AttackReport,
        narrative: impl Into<String>,
    ) -> MlVulnRecord {
        let metrics = map_evaluation_to_metrics(&report, &threat_model);
        let score = base_score(&metrics);
        MlVulnRecord {
            title: title.into(),
            threat_model,
            attack_name: report.attack.clone(),
            report,
            metrics,
            score,
            narrative: narrative.into(),
        }
    }
}

/// Renders records as a markdown report and a JSON document, ordered by
/// descending score and then title.
pub fn render_report(records: &[MlVulnRecord]) -> (String, String) {
    let mut sorted: Vec<&MlVulnRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        b.score
            .base_score
            .total_cmp(&a.score.base_score)
            .then_with(|| a.title.cmp(&b.title))
    });

    let mut md = String::from("# Model Vulnerability Report\n\n");
    if sorted.is_empty() {
        md.push_str("No findings.\n");
    } else {
        md.push_str("| Title | Threat model | Attack | Success rate | Score | Severity |\n");
        md.push_str("|---|---|---|---|---|---|\n");
        for r in &sorted {
            md.push_str(&format!(
                "| {} | {} | {} | {:.1}% | {:.1} | {} |\n",
                r.title,
                r.threat_model.name(),
                r.attack_name,
                100.0 * r.report.success_rate,
                r.score.base_score,
                r.score.severity.name(),
            ));
        }
        for r in &sorted {
            md.push_str(&format!(
                "\n## {}\n\n- Vector: `{}`\n- Base score: {:.1} ({})\n\n{}\n",
                r.title,
                r.score.vector,
                r.score.base_score,
                r.score.severity.name(),
                r.narrative,
            ));
        }
    }

    let owned: Vec<MlVulnRecord> = sorted.into_iter().cloned().collect();
    let json = serde_json::to_string_pretty(&owned).expect("records serialize");
    (md, json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_metrics() -> Vec<BaseMetrics> {
        let mut out = Vec::with_capacity(2592);
        for &av in &[
            AttackVector::Network,
            AttackVector::Adjacent,
            AttackVector::Local,
            AttackVector::Physical,
        ] {
            for &ac in &[AttackComplexity::Low, AttackComplexity::High] {
                for &pr in &[
                    PrivilegesRequired::None,
                    PrivilegesRequired::Low,
                    PrivilegesRequired::High,
                ] {
                    for &ui in &[UserInteraction::None, UserInteraction::Required] {
                        for &scope in &[Scope::Unchanged, Scope::Changed] {
                            for &c in &[ImpactLevel::None, ImpactLevel::Low, ImpactLevel::High] {
                                for &i in &[ImpactLevel::None, ImpactLevel::Low, ImpactLevel::High]
                                {
                                    for &a in
                                        &[ImpactLevel::None, ImpactLevel::Low, ImpactLevel::High]
                                    {
                                        out.push(BaseMetrics {
                                            attack_vector: av,
                                            attack_complexity: ac,
                                            privileges_required: pr,
                                            user_interaction: ui,
                                            scope,
                                            confidentiality: c,
                                            integrity: i,
                                            availability: a,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn reference_scores() {
        for (vector, score, severity) in [
            ("CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 9.8, Severity::Critical),
            ("CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:C/C:H/I:H/A:H", 10.0, Severity::Critical),
            ("CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:N", 0.0, Severity::None),
            ("CVSS:3.0/AV:N/AC:L/PR:N/UI:R/S:C/C:L/I:L/A:N", 6.1, Severity::Medium),
            ("CVSS:3.0/AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H", 7.8, Severity::High),
            ("CVSS:3.0/AV:P/AC:H/PR:H/UI:R/S:U/C:L/I:N/A:N", 1.6, Severity::Low),
        ] {
            let m = parse_vector(vector).unwrap();
            let r = base_score(&m);
            assert_eq!(r.base_score, score, "{vector}");
            assert_eq!(r.severity, severity, "{vector}");
            assert_eq!(r.vector, vector);
        }
    }

    #[test]
    fn zero_impact_forces_zero_score_for_any_exploitability() {
        for m in all_metrics() {
            if m.confidentiality == ImpactLevel::None
                && m.integrity == ImpactLevel::None
                && m.availability == ImpactLevel::None
            {
                let r = base_score(&m);
                assert_eq!(r.base_score, 0.0, "{}", m.vector());
                assert_eq!(r.severity, Severity::None);
                assert!(r.impact_sub <= 0.0);
            }
        }
    }

    #[test]
    fn every_combination_round_trips_and_stays_in_range() {
        for m in all_metrics() {
            let v = m.vector();
            assert_eq!(parse_vector(&v).unwrap(), m);
            let r = base_score(&m);
            assert!((0.0..=10.0).contains(&r.base_score), "{v}: {}", r.base_score);
            // One-decimal grid.
            let tenths = r.base_score * 10.0;
            assert_eq!(tenths, tenths.round(), "{v}: {}", r.base_score);
            assert_eq!(r.severity, Severity::from_score(r.base_score));
        }
    }

    #[test]
    fn raising_an_impact_metric_never_lowers_the_score() {
        fn raised(level: ImpactLevel) -> Option<ImpactLevel> {
            match level {
                ImpactLevel::None => Some(ImpactLevel::Low),
                ImpactLevel::Low => Some(ImpactLevel::High),
                ImpactLevel::High => None,
            }
        }
        for m in all_metrics() {
            let base = base_score(&m).base_score;
            for pick in 0..3 {
                let mut up = m;
                let slot = match pick {
                    0 => &mut up.confidentiality,
                    1 => &mut up.integrity,
                    _ => &mut up.availability,
                };
                if let Some(next) = raised(*slot) {
                    *slot = next;
                    assert!(
                        base_score(&up).base_score >= base,
                        "raising {} of {}",
                        pick,
                        m.vector()
                    );
                }
            }
        }
    }

    #[test]
    fn parse_errors_are_distinct() {
        assert_eq!(
            parse_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
            Err(VectorParseError::BadPrefix)
        );
        assert_eq!(
            parse_vector("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
            Err(VectorParseError::BadPrefix)
        );
        assert_eq!(
            parse_vector("CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H"),
            Err(VectorParseError::MissingMetric("A"))
        );
        assert_eq!(
            parse_vector("CVSS:3.0/AV:N/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
            Err(VectorParseError::DuplicateMetric("AV"))
        );
        assert_eq!(
            parse_vector("CVSS:3.0/av:n/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
            Err(VectorParseError::UnknownCode("av:n".to_string()))
        );
        assert_eq!(
            parse_vector("CVSS:3.0/AV:X/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
            Err(VectorParseError::UnknownCode("AV:X".to_string()))
        );
        assert_eq!(
            parse_vector("CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H/"),
            Err(VectorParseError::UnknownCode(String::new()))
        );
    }

    #[test]
    fn vector_order_is_free_on_input() {
        let canonical =
            parse_vector("CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H").unwrap();
        let scrambled =
            parse_vector("CVSS:3.0/A:H/I:H/C:H/S:U/UI:N/PR:N/AC:L/AV:N").unwrap();
        assert_eq!(canonical, scrambled);
    }

    fn report_with_success(rate: f64) -> AttackReport {
        AttackReport {
            attack: "fgsm".to_string(),
            epsilon: Some(0.05),
            examples: 100,
            clean_top1: 0.9,
            clean_top5: 1.0,
            adv_top1: 1.0 - rate,
            adv_top5: 1.0,
            success_rate: rate,
            success_rate_cleanly_correct: Some(rate),
            mean_l2: 0.1,
            median_l2: 0.1,
            mean_linf: 0.05,
            median_linf: 0.05,
            median_l2_successes: Some(0.1),
        }
    }

    #[test]
    fn mapping_table_white_box_high_success() {
        let m = map_evaluation_to_metrics(&report_with_success(0.95), &ThreatModel::WhiteBox);
        assert_eq!(m.privileges_required, PrivilegesRequired::High);
        assert_eq!(m.attack_complexity, AttackComplexity::Low);
        assert_eq!(m.integrity, ImpactLevel::High);
        assert_eq!(m.attack_vector, AttackVector::Network);
        assert_eq!(m.user_interaction, UserInteraction::None);
        assert_eq!(m.scope, Scope::Unchanged);
        assert_eq!(m.confidentiality, ImpactLevel::None);
        assert_eq!(m.availability, ImpactLevel::None);
    }

    #[test]
    fn mapping_table_black_box_weak_transfer() {
        let threat = ThreatModel::BlackBoxTransfer { mean_transfer_rate: 13.0 };
        let m = map_evaluation_to_metrics(&report_with_success(0.13), &threat);
        assert_eq!(m.privileges_required, PrivilegesRequired::None);
        assert_eq!(m.attack_complexity, AttackComplexity::High);
        assert_eq!(m.integrity, ImpactLevel::Low);

        let strong = ThreatModel::BlackBoxTransfer { mean_transfer_rate: 56.0 };
        let m = map_evaluation_to_metrics(&report_with_success(0.56), &strong);
        assert_eq!(m.attack_complexity, AttackComplexity::Low);
        assert_eq!(m.integrity, ImpactLevel::High);
    }

    #[test]
    fn zero_success_maps_to_zero_score() {
        let record = MlVulnRecord::new(
            "inert attack",
            ThreatModel::WhiteBox,
            report_with_success(0.0),
            "no effect observed",
        );
        assert_eq!(record.metrics.integrity, ImpactLevel::None);
        assert_eq!(record.score.base_score, 0.0);
        assert_eq!(record.score.severity, Severity::None);
    }

    #[test]
    fn records_render_sorted_and_round_trip() {
        let low = MlVulnRecord::new(
            "weak finding",
            ThreatModel::BlackBoxTransfer { mean_transfer_rate: 13.0 },
            report_with_success(0.13),
            "transfers poorly",
        );
        let high = MlVulnRecord::new(
            "strong finding",
            ThreatModel::WhiteBox,
            report_with_success(0.95),
            "white-box break",
        );
        let (md, json) = render_report(&[low.clone(), high.clone()]);

        let hi = md.find("strong finding").unwrap();
        let lo = md.find("weak finding").unwrap();
        assert!(hi < lo, "higher score must render first");

        let parsed: Vec<MlVulnRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, vec![high.clone(), low.clone()]);

        // The rendered vector string parses back to the same metrics.
        assert_eq!(parse_vector(&high.score.vector).unwrap(), high.metrics);

        let (md_empty, json_empty) = render_report(&[]);
        assert!(md_empty.contains("No findings"));
        let parsed: Vec<MlVulnRecord> = serde_json::from_str(&json_empty).unwrap();
        assert!(parsed.is_empty());
    }

    #[test]
    fn ties_in_score_order_by_title() {
        let a = MlVulnRecord::new(
            "alpha",
            ThreatModel::WhiteBox,
            report_with_success(0.9),
            "",
        );
        let b = MlVulnRecord::new(
            "beta",
            ThreatModel::WhiteBox,
            report_with_success(0.9),
            "",
        );
        let (md, _) = render_report(&[b, a]);
        assert!(md.find("alpha").unwrap() < md.find("beta").unwrap());
    }
}
