//! CSV formats for ads, employment, and panels.
//!
//! - `ads.csv`: header `ad_id,month,soc,skills`; month as `YYYY-MM`; skills
//!   semicolon-joined.
//! - `employment.csv`: header `soc,year,employment`.
//! - panel CSV: header `month,<skill_1>,...`; month as `YYYY-MM`; values in
//!   scientific notation with 10 significant digits.

use std::path::Path;

use crate::error::{Error, Result};
use crate::market::{
    EmploymentMode, JobAdRecord, OccupationEmployment, SkillSharePanel,
};
use crate::months::{format_month, parse_month, MonthRange};

fn parse_error(path: &Path, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

pub fn read_ads_csv(path: &Path, epoch_year: i32) -> Result<Vec<JobAdRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut ads = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        if row.len() != 4 {
            return Err(parse_error(
                path,
                format!("record {} has {} fields, expected 4", line + 2, row.len()),
            ));
        }
        let month = parse_month(&row[1], epoch_year)
            .map_err(|e| parse_error(path, format!("record {}: {e}", line + 2)))?;
        let skills: std::collections::BTreeSet<String> = row[3]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if skills.is_empty() {
            return Err(parse_error(
                path,
                format!("record {}: ad `{}` lists no skills", line + 2, &row[0]),
            ));
        }
        ads.push(JobAdRecord {
            ad_id: row[0].to_string(),
            month,
            occupation: row[2].to_string(),
            skills,
        });
    }
    Ok(ads)
}

pub fn write_ads_csv(path: &Path, ads: &[JobAdRecord], epoch_year: i32) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["ad_id", "month", "soc", "skills"])?;
    for ad in ads {
        let skills: Vec<&str> = ad.skills.iter().map(String::as_str).collect();
        writer.write_record([
            ad.ad_id.as_str(),
            &format_month(ad.month, epoch_year),
            ad.occupation.as_str(),
            &skills.join(";"),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_employment_csv(path: &Path) -> Result<Vec<OccupationEmployment>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        if row.len() != 3 {
            return Err(parse_error(
                path,
                format!("record {} has {} fields, expected 3", line + 2, row.len()),
            ));
        }
        let year: i32 = row[1]
            .parse()
            .map_err(|_| parse_error(path, format!("record {}: bad year `{}`", line + 2, &row[1])))?;
        let employment: u64 = row[2].parse().map_err(|_| {
            parse_error(
                path,
                format!("record {}: bad employment `{}`", line + 2, &row[2]),
            )
        })?;
        records.push(OccupationEmployment {
            occupation: row[0].to_string(),
            year,
            employment,
        });
    }
    Ok(records)
}

pub fn write_employment_csv(path: &Path, records: &[OccupationEmployment]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["soc", "year", "employment"])?;
    for rec in records {
        writer.write_record([
            rec.occupation.as_str(),
            &rec.year.to_string(),
            &rec.employment.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Panel values are written with 10 significant digits, which is enough to
/// audit by hand and stable across reruns.
pub fn format_share(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn write_panel_csv(path: &Path, panel: &SkillSharePanel, epoch_year: i32) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["month".to_string()];
    header.extend(panel.skills.iter().cloned());
    writer.write_record(&header)?;
    for (t, month) in panel.range.iter().enumerate() {
        let mut row = vec![format_month(month, epoch_year)];
        row.extend(panel.values[t].iter().map(|v| format_share(*v)));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a panel CSV. The employment mode is not stored in the file; the
/// result is tagged contemporaneous.
pub fn read_panel_csv(path: &Path, epoch_year: i32) -> Result<SkillSharePanel> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.len() < 2 || &header[0] != "month" {
        return Err(parse_error(
            path,
            "expected header `month,<skill>,...`".to_string(),
        ));
    }
    let skills: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut months = Vec::new();
    let mut values = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        if row.len() != header.len() {
            return Err(parse_error(
                path,
                format!(
                    "record {} has {} fields, expected {}",
                    line + 2,
                    row.len(),
                    header.len()
                ),
            ));
        }
        let month = parse_month(&row[0], epoch_year)
            .map_err(|e| parse_error(path, format!("record {}: {e}", line + 2)))?;
        months.push(month);
        let row_values: Vec<f64> = row
            .iter()
            .skip(1)
            .map(|cell| {
                cell.parse::<f64>()
                    .map_err(|_| parse_error(path, format!("record {}: bad value `{cell}`", line + 2)))
            })
            .collect::<Result<_>>()?;
        values.push(row_values);
    }
    if months.is_empty() {
        return Err(parse_error(path, "panel has no rows".to_string()));
    }
    for pair in months.windows(2) {
        if pair[1] != pair[0] + 1 {
            return Err(parse_error(
                path,
                format!(
                    "months not contiguous: {} follows {}",
                    format_month(pair[1], epoch_year),
                    format_month(pair[0], epoch_year)
                ),
            ));
        }
    }
    Ok(SkillSharePanel {
        skills,
        range: MonthRange::new(months[0], months.len()),
        values,
        employment_mode: EmploymentMode::Contemporaneous,
    })
}
