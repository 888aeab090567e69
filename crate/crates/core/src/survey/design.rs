//! Dummy coding of survey records into a model-ready design matrix.
//!
//! Fixed-effect columns are ten binary indicators in a fixed order:
//! education (Associate, Bachelor, Graduate), race (Black, Asian, Other),
//! income (35-75k, 75-150k, over 150k), gender (Female). Base categories
//! (HighSchoolOrLess, White, Under35k, Male) encode as all zeros within
//! their group; an intercept column is implicit, giving 11 fixed parameters.

use super::{Education, Gender, Income, Race, SurveyDataset, SurveyError, SurveyRecord};

/// Number of indicator columns (excluding the implicit intercept).
pub const INDICATOR_COUNT: usize = 10;
/// Fixed-effect parameter count: intercept plus the ten indicators.
pub const FIXED_EFFECT_COUNT: usize = 11;

/// One row's category levels, stored compactly; level 0 is the base
/// category of each group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RowLevels {
    education: u8,
    race: u8,
    income: u8,
    gender: u8,
}

/// Dummy-coded fixed-effect covariates, state index, and response.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: Vec<RowLevels>,
    state_index: Vec<usize>,
    response: Vec<u8>,
    roster: Vec<String>,
}

impl DesignMatrix {
    /// A design with no observations over the given roster, for prior-only
    /// evaluation.
    pub fn empty(roster: Vec<String>) -> Self {
        DesignMatrix { rows: Vec::new(), state_index: Vec::new(), response: Vec::new(), roster }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of states in the roster (random-intercept dimension).
    pub fn state_count(&self) -> usize {
        self.roster.len()
    }

    pub fn roster(&self) -> &[String] {
        &self.roster
    }

    /// 0-based roster index of row `i`'s state.
    pub fn state_index(&self, i: usize) -> usize {
        self.state_index[i]
    }

    /// Binary response of row `i`.
    pub fn response(&self, i: usize) -> u8 {
        self.response[i]
    }

    /// Materializes the ten indicator columns of row `i`.
    pub fn indicator_row(&self, i: usize) -> [f64; INDICATOR_COUNT] {
        let mut x = [0.0; INDICATOR_COUNT];
        let r = self.rows[i];
        if r.education > 0 {
            x[r.education as usize - 1] = 1.0;
        }
        if r.race > 0 {
            x[3 + r.race as usize - 1] = 1.0;
        }
        if r.income > 0 {
            x[6 + r.income as usize - 1] = 1.0;
        }
        if r.gender > 0 {
            x[9] = 1.0;
        }
        x
    }

    /// Indices (into the 11-long fixed-effect vector, intercept at 0) of the
    /// non-base indicators active on row `i`. At most four entries.
    #[inline]
    pub fn active_coefficients(&self, i: usize) -> impl Iterator<Item = usize> {
        let r = self.rows[i];
        let slot = |base: usize, level: u8| (level > 0).then(|| base + level as usize);
        [
            slot(0, r.education),
            slot(3, r.race),
            slot(6, r.income),
            slot(9, r.gender),
        ]
        .into_iter()
        .flatten()
    }

    /// Reconstructs the record a row was encoded from.
    pub fn decode_row(&self, i: usize) -> SurveyRecord {
        let r = self.rows[i];
        SurveyRecord {
            education: Education::ALL[r.education as usize],
            race: Race::ALL[r.race as usize],
            income: Income::ALL[r.income as usize],
            gender: Gender::ALL[r.gender as usize],
            state: self.roster[self.state_index[i]].clone(),
            vaccinated: self.response[i],
        }
    }
}

/// Dummy-encodes a dataset against the base categories, assigning each row
/// its 0-based roster index. Deterministic: equal datasets produce equal
/// matrices.
pub fn encode_design(data: &SurveyDataset) -> Result<DesignMatrix, SurveyError> {
    if data.is_empty() {
        return Err(SurveyError::EmptyDataset);
    }
    let roster = data.states.clone();
    let mut rows = Vec::with_capacity(data.records.len());
    let mut state_index = Vec::with_capacity(data.records.len());
    let mut response = Vec::with_capacity(data.records.len());
    for rec in &data.records {
        rows.push(RowLevels {
            education: rec.education.level() as u8,
            race: rec.race.level() as u8,
            income: rec.income.level() as u8,
            gender: rec.gender.level() as u8,
        });
        let j = roster
            .binary_search(&rec.state)
            .expect("record state must be in the dataset roster");
        state_index.push(j);
        response.push(rec.vaccinated);
    }
    Ok(DesignMatrix { rows, state_index, response, roster })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(
        gender: Gender,
        race: Race,
        education: Education,
        income: Income,
        state: &str,
        vaccinated: u8,
    ) -> SurveyRecord {
        SurveyRecord { gender, race, education, income, state: state.into(), vaccinated }
    }

    #[test]
    fn base_category_row_is_all_zeros() {
        let ds = SurveyDataset::from_records(
            vec![record(Gender::Male, Race::White, Education::HighSchoolOrLess, Income::Under35k, "TX", 0)],
            0,
        );
        let d = encode_design(&ds).unwrap();
        assert_eq!(d.indicator_row(0), [0.0; 10]);
        assert_eq!(d.active_coefficients(0).count(), 0);
    }

    #[test]
    fn non_base_row_activates_expected_columns() {
        // Graduate -> X3, Asian -> X5, Over150k -> X9, Female -> X10
        let ds = SurveyDataset::from_records(
            vec![record(Gender::Female, Race::Asian, Education::Graduate, Income::Over150k, "MA", 1)],
            0,
        );
        let d = encode_design(&ds).unwrap();
        let mut expected = [0.0; 10];
        expected[2] = 1.0; // X3
        expected[4] = 1.0; // X5
        expected[8] = 1.0; // X9
        expected[9] = 1.0; // X10
        assert_eq!(d.indicator_row(0), expected);
        // corresponding beta indices: 3, 5, 9, 10
        assert_eq!(d.active_coefficients(0).collect::<Vec<_>>(), vec![3, 5, 9, 10]);
    }

    #[test]
    fn same_state_gets_same_index() {
        let ds = SurveyDataset::from_records(
            vec![
                record(Gender::Male, Race::White, Education::Bachelor, Income::Under35k, "TX", 1),
                record(Gender::Female, Race::Black, Education::Associate, Income::Over150k, "AL", 0),
                record(Gender::Male, Race::Other, Education::Graduate, Income::From35kTo75k, "TX", 1),
            ],
            0,
        );
        let d = encode_design(&ds).unwrap();
        assert_eq!(d.state_index(0), d.state_index(2));
        assert_ne!(d.state_index(0), d.state_index(1));
        // roster is sorted, so AL comes first
        assert_eq!(d.state_index(1), 0);
        assert_eq!(d.state_count(), 2);
    }

    #[test]
    fn encoding_is_deterministic() {
        let recs = vec![
            record(Gender::Female, Race::Asian, Education::Graduate, Income::Over150k, "MA", 1),
            record(Gender::Male, Race::White, Education::HighSchoolOrLess, Income::Under35k, "TX", 0),
        ];
        let a = encode_design(&SurveyDataset::from_records(recs.clone(), 0)).unwrap();
        let b = encode_design(&SurveyDataset::from_records(recs, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_dataset_errors() {
        let ds = SurveyDataset::from_records(Vec::new(), 3);
        assert!(matches!(encode_design(&ds), Err(SurveyError::EmptyDataset)));
    }

    #[test]
    fn group_sums_at_most_one_and_decode_round_trips() {
        // every combination of levels
        let mut recs = Vec::new();
        for &g in &Gender::ALL {
            for &r in &Race::ALL {
                for &e in &Education::ALL {
                    for &i in &Income::ALL {
                        recs.push(record(g, r, e, i, "NY", 1));
                    }
                }
            }
        }
        let ds = SurveyDataset::from_records(recs.clone(), 0);
        let d = encode_design(&ds).unwrap();
        for i in 0..d.n_rows() {
            let x = d.indicator_row(i);
            for group in [&x[0..3], &x[3..6], &x[6..9], &x[9..10]] {
                let s: f64 = group.iter().sum();
                assert!(s == 0.0 || s == 1.0, "group sum {s}");
            }
            assert_eq!(d.decode_row(i), recs[i]);
        }
    }
}
