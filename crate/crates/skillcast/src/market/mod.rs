//! Job-ad ingestion and skill-share panels.
//!
//! A skill's share in a month is the fraction of an occupation's ads that
//! mention it, weighted by that occupation's share of total employment,
//! summed over occupations. Shares are additive across skills, so groups of
//! skills can be aggregated by summing columns.

pub mod io;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::months::{format_month, MonthRange};

/// One parsed job advertisement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobAdRecord {
    pub ad_id: String,
    pub month: i32,
    pub occupation: String,
    /// Distinct skills mentioned; an ad mentions a skill once no matter how
    /// often the text repeats it.
    pub skills: BTreeSet<String>,
}

/// One annual employment observation for an occupation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupationEmployment {
    pub occupation: String,
    pub year: i32,
    pub employment: u64,
}

/// Interpolated employment for one occupation-month.
#[derive(Clone, Debug, PartialEq)]
pub struct MonthlyEmployment {
    pub occupation: String,
    pub month: i32,
    pub employment: f64,
}

/// How the employment weighting evolves over the panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmploymentMode {
    /// Each month uses that month's interpolated employment ratio.
    Contemporaneous,
    /// Every month reuses the employment ratio of the panel's first month,
    /// isolating within-occupation changes in skill mix.
    FixedFirstMonth,
}

impl std::str::FromStr for EmploymentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contemporaneous" => Ok(Self::Contemporaneous),
            "fixed2010" | "fixed-first-month" => Ok(Self::FixedFirstMonth),
            other => Err(Error::Config(format!(
                "unknown employment mode `{other}` (expected `contemporaneous` or `fixed2010`)"
            ))),
        }
    }
}

/// Month-by-month employment per occupation over a range, linearly
/// interpolated between annual anchors.
#[derive(Clone, Debug)]
pub struct EmploymentTable {
    range: MonthRange,
    values: BTreeMap<String, Vec<f64>>,
    totals: Vec<f64>,
}

impl EmploymentTable {
    pub fn range(&self) -> MonthRange {
        self.range
    }

    pub fn occupations(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn employment(&self, occupation: &str, month: i32) -> Result<f64> {
        let series = self
            .values
            .get(occupation)
            .ok_or_else(|| Error::MissingOccupation(occupation.to_string()))?;
        let offset = self
            .range
            .offset(month)
            .ok_or_else(|| Error::InvalidInput(format!("month {month} outside the range")))?;
        Ok(series[offset])
    }

    /// Total employment across occupations at a month.
    pub fn total(&self, month: i32) -> Result<f64> {
        let offset = self
            .range
            .offset(month)
            .ok_or_else(|| Error::InvalidInput(format!("month {month} outside the range")))?;
        Ok(self.totals[offset])
    }

    pub fn monthly_records(&self) -> Vec<MonthlyEmployment> {
        let mut out = Vec::new();
        for (occupation, series) in &self.values {
            for (offset, employment) in series.iter().enumerate() {
                out.push(MonthlyEmployment {
                    occupation: occupation.clone(),
                    month: self.range.start + offset as i32,
                    employment: *employment,
                });
            }
        }
        out
    }
}

/// Expands annual employment figures into monthly ones.
///
/// Each annual figure anchors at `anchor_month` (1-based; January is the
/// default convention everywhere in this crate) of its stated year. Values
/// between anchors lie on the connecting line; beyond the outermost anchors
/// they stay constant.
pub fn interpolate_employment(
    annual: &[OccupationEmployment],
    range: MonthRange,
    anchor_month: u32,
    epoch_year: i32,
) -> Result<EmploymentTable> {
    if !(1..=12).contains(&anchor_month) {
        return Err(Error::Config(format!(
            "anchor month {anchor_month} outside 1..=12"
        )));
    }
    if range.len == 0 {
        return Err(Error::InvalidInput("empty month range".into()));
    }
    // anchor index per (occupation, year)
    let mut anchors: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    for rec in annual {
        let idx = crate::months::month_index(rec.year, anchor_month, epoch_year)?;
        let prev = anchors
            .entry(rec.occupation.clone())
            .or_default()
            .insert(idx, rec.employment as f64);
        if prev.is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate employment record for occupation `{}` year {}",
                rec.occupation, rec.year
            )));
        }
    }
    if anchors.is_empty() {
        return Err(Error::InvalidInput("no employment records".into()));
    }

    let mut values = BTreeMap::new();
    for (occupation, occ_anchors) in &anchors {
        let series: Vec<f64> = range.iter().map(|m| eval_piecewise(occ_anchors, m)).collect();
        values.insert(occupation.clone(), series);
    }
    let totals = (0..range.len)
        .map(|offset| values.values().map(|series| series[offset]).sum())
        .collect();
    Ok(EmploymentTable {
        range,
        values,
        totals,
    })
}

fn eval_piecewise(anchors: &BTreeMap<i32, f64>, month: i32) -> f64 {
    let before = anchors.range(..=month).next_back();
    let after = anchors.range(month..).next();
    match (before, after) {
        (Some((&m0, &v0)), Some((&m1, &v1))) => {
            if m0 == m1 {
                v0
            } else {
                v0 + (v1 - v0) * f64::from(month - m0) / f64::from(m1 - m0)
            }
        }
        (Some((_, &v)), None) | (None, Some((_, &v))) => v, // constant beyond the ends
        (None, None) => unreachable!("anchors are non-empty per occupation"),
    }
}

/// Monthly skill-share series for a set of skills.
#[derive(Clone, Debug, PartialEq)]
pub struct SkillSharePanel {
    pub skills: Vec<String>,
    pub range: MonthRange,
    /// Row per month, column per skill, matching `skills` order.
    pub values: Vec<Vec<f64>>,
    pub employment_mode: EmploymentMode,
}

impl SkillSharePanel {
    pub fn n_skills(&self) -> usize {
        self.skills.len()
    }

    pub fn n_months(&self) -> usize {
        self.range.len
    }

    pub fn column(&self, skill_index: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[skill_index]).collect()
    }

    pub fn skill_index(&self, skill: &str) -> Result<usize> {
        self.skills
            .iter()
            .position(|s| s == skill)
            .ok_or_else(|| Error::UnknownSkill(skill.to_string()))
    }

    /// A panel holding only the named skill's column.
    pub fn select(&self, skill: &str) -> Result<SkillSharePanel> {
        let idx = self.skill_index(skill)?;
        Ok(SkillSharePanel {
            skills: vec![skill.to_string()],
            range: self.range,
            values: self.values.iter().map(|row| vec![row[idx]]).collect(),
            employment_mode: self.employment_mode,
        })
    }
}

/// Counters for conditions tolerated during a panel build.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PanelDiagnostics {
    /// Occupation-months with zero ads; they contribute nothing to any
    /// skill's sum for that month.
    pub zero_ad_cells: usize,
}

/// Share of one skill in one occupation-month: the fraction of the
/// occupation's ads mentioning the skill times the occupation's share of
/// total employment.
pub fn compute_skill_share(
    ads: &[JobAdRecord],
    emp: &EmploymentTable,
    skill: &str,
    occupation: &str,
    month: i32,
    epoch_year: i32,
) -> Result<f64> {
    let mut total = 0u64;
    let mut mentions = 0u64;
    for ad in ads {
        if ad.month == month && ad.occupation == occupation {
            total += 1;
            if ad.skills.contains(skill) {
                mentions += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::UndefinedShare {
            occupation: occupation.to_string(),
            month: format_month(month, epoch_year),
        });
    }
    let occupation_emp = emp.employment(occupation, month)?;
    let total_emp = emp.total(month)?;
    if total_emp <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "total employment at month {} is zero",
            format_month(month, epoch_year)
        )));
    }
    Ok(share_term(mentions, total, occupation_emp, total_emp))
}

/// The single-occupation term of the share sum. Kept in one place so the
/// panel builder and the per-cell path produce bit-identical arithmetic.
#[inline]
pub fn share_term(mentions: u64, total_ads: u64, occupation_emp: f64, total_emp: f64) -> f64 {
    (mentions as f64 / total_ads as f64) * (occupation_emp / total_emp)
}

/// Builds the full panel: cell (month, skill) sums the per-occupation share
/// terms over `occupations` in sorted order (fixed order keeps rebuilds
/// bit-identical).
pub fn build_panel(
    ads: &[JobAdRecord],
    emp: &EmploymentTable,
    skills: &[String],
    occupations: &[String],
    range: MonthRange,
    mode: EmploymentMode,
) -> Result<(SkillSharePanel, PanelDiagnostics)> {
    if skills.is_empty() {
        return Err(Error::InvalidInput("no skills requested".into()));
    }
    if occupations.is_empty() {
        return Err(Error::InvalidInput("no occupations requested".into()));
    }
    {
        let mut seen = BTreeSet::new();
        for s in skills {
            if !seen.insert(s) {
                return Err(Error::InvalidInput(format!("duplicate skill `{s}`")));
            }
        }
    }
    let mut sorted_occupations: Vec<&String> = occupations.iter().collect();
    sorted_occupations.sort();
    sorted_occupations.dedup();
    for occ in &sorted_occupations {
        // Fail fast if employment data is missing.
        emp.employment(occ, range.start)?;
    }

    // Count ads per occupation-month and mentions per (occupation, skill,
    // month) in one pass.
    let skill_pos: BTreeMap<&str, usize> = skills
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let occ_pos: BTreeMap<&str, usize> = sorted_occupations
        .iter()
        .enumerate()
        .map(|(i, o)| (o.as_str(), i))
        .collect();
    let n_occ = sorted_occupations.len();
    let mut ad_counts = vec![0u64; range.len * n_occ];
    let mut mention_counts = vec![0u64; range.len * n_occ * skills.len()];
    for ad in ads {
        if ad.skills.is_empty() {
            return Err(Error::InvalidInput(format!(
                "ad `{}` mentions no skills",
                ad.ad_id
            )));
        }
        let Some(t) = range.offset(ad.month) else {
            return Err(Error::InvalidInput(format!(
                "ad `{}` dated {} falls outside the panel range",
                ad.ad_id,
                format_month(ad.month, crate::months::DEFAULT_EPOCH_YEAR)
            )));
        };
        let Some(&j) = occ_pos.get(ad.occupation.as_str()) else {
            continue; // occupation not under study
        };
        ad_counts[t * n_occ + j] += 1;
        for skill in &ad.skills {
            if let Some(&i) = skill_pos.get(skill.as_str()) {
                mention_counts[(t * n_occ + j) * skills.len() + i] += 1;
            }
        }
    }

    let mut diagnostics = PanelDiagnostics::default();
    let mut values = vec![vec![0.0; skills.len()]; range.len];
    for (t, month) in range.iter().enumerate() {
        let total_emp = emp.total(month)?;
        if total_emp <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "total employment at month {} is zero",
                format_month(month, crate::months::DEFAULT_EPOCH_YEAR)
            )));
        }
        for (j, occupation) in sorted_occupations.iter().enumerate() {
            let total_ads = ad_counts[t * n_occ + j];
            if total_ads == 0 {
                diagnostics.zero_ad_cells += 1;
                continue;
            }
            let (occ_emp, tot_emp) = match mode {
                EmploymentMode::Contemporaneous => (emp.employment(occupation, month)?, total_emp),
                EmploymentMode::FixedFirstMonth => (
                    emp.employment(occupation, range.start)?,
                    emp.total(range.start)?,
                ),
            };
            for i in 0..skills.len() {
                let mentions = mention_counts[(t * n_occ + j) * skills.len() + i];
                values[t][i] += share_term(mentions, total_ads, occ_emp, tot_emp);
            }
        }
    }

    Ok((
        SkillSharePanel {
            skills: skills.to_vec(),
            range,
            values,
            employment_mode: mode,
        },
        diagnostics,
    ))
}

/// Sum of the subset's columns, month by month. Shares are additive, so
/// this is the share of "any of these skills".
pub fn aggregate_series(panel: &SkillSharePanel, subset: &[String]) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::InvalidInput("empty skill subset".into()));
    }
    let indices: Vec<usize> = subset
        .iter()
        .map(|s| panel.skill_index(s))
        .collect::<Result<_>>()?;
    Ok(panel
        .values
        .iter()
        .map(|row| indices.iter().map(|&i| row[i]).sum())
        .collect())
}

/// Aggregates a subset into a one-column panel named `name`.
pub fn aggregate_panel(
    panel: &SkillSharePanel,
    subset: &[String],
    name: &str,
) -> Result<SkillSharePanel> {
    let series = aggregate_series(panel, subset)?;
    Ok(SkillSharePanel {
        skills: vec![name.to_string()],
        range: panel.range,
        values: series.into_iter().map(|v| vec![v]).collect(),
        employment_mode: panel.employment_mode,
    })
}
