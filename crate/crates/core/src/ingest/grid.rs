use serde::Serialize;

/// Fixed-length windows anchored at `anchor`: period 1 is
/// `[anchor, anchor + length - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeriodGrid {
    pub anchor: i64,
    pub length: i64,
}

impl PeriodGrid {
    pub const TEN_YEAR: PeriodGrid = PeriodGrid { anchor: 1945, length: 10 };
    pub const FIVE_YEAR: PeriodGrid = PeriodGrid { anchor: 1945, length: 5 };

    pub fn period_of(&self, year: i64) -> i64 {
        (year - self.anchor).div_euclid(self.length) + 1
    }

    /// Inclusive first and last year of a period.
    pub fn window(&self, period: i64) -> (i64, i64) {
        let start = self.anchor + (period - 1) * self.length;
        (start, start + self.length - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning() {
        let g = PeriodGrid::TEN_YEAR;
        assert_eq!(g.period_of(1945), 1);
        assert_eq!(g.period_of(1954), 1);
        assert_eq!(g.period_of(1957), 2);
        assert_eq!(g.period_of(2017), 8);
        assert_eq!(g.window(2), (1955, 1964));
        assert_eq!(PeriodGrid::FIVE_YEAR.period_of(1957), 3);
    }
}
