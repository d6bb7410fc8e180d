//! Month indexing: panels store months as integer offsets from a fixed
//! epoch (January of `epoch_year`), and files show them as `YYYY-MM`.

use crate::error::{Error, Result};

pub const DEFAULT_EPOCH_YEAR: i32 = 2010;

/// Index of `year`-`month` (1-based month) relative to January of the epoch
/// year.
pub fn month_index(year: i32, month: u32, epoch_year: i32) -> Result<i32> {
    if !(1..=12).contains(&month) {
        return Err(Error::InvalidInput(format!("month {month} outside 1..=12")));
    }
    Ok((year - epoch_year) * 12 + (month as i32 - 1))
}

/// Formats a month index as `YYYY-MM`.
pub fn format_month(index: i32, epoch_year: i32) -> String {
    let year = epoch_year + index.div_euclid(12);
    let month = index.rem_euclid(12) + 1;
    format!("{year:04}-{month:02}")
}

/// Parses `YYYY-MM` into a month index.
pub fn parse_month(label: &str, epoch_year: i32) -> Result<i32> {
    let bad = || Error::InvalidInput(format!("bad month `{label}`; expected YYYY-MM"));
    let (y, m) = label.split_once('-').ok_or_else(bad)?;
    let year: i32 = y.parse().map_err(|_| bad())?;
    let month: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&month) {
        return Err(bad());
    }
    month_index(year, month, epoch_year)
}

/// A contiguous run of months, addressed by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonthRange {
    pub start: i32,
    pub len: usize,
}

impl MonthRange {
    pub fn new(start: i32, len: usize) -> Self {
        Self { start, len }
    }

    pub fn end_exclusive(&self) -> i32 {
        self.start + self.len as i32
    }

    pub fn contains(&self, index: i32) -> bool {
        index >= self.start && index < self.end_exclusive()
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.start..self.end_exclusive()
    }

    /// Position of a month inside the range.
    pub fn offset(&self, index: i32) -> Option<usize> {
        self.contains(index).then(|| (index - self.start) as usize)
    }
}
