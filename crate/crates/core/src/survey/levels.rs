//! Categorical covariates and the spelling tables used to parse them.

use std::collections::HashMap;

/// Respondent gender. `Male` is the base category of the gender contrast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Male,
    Female,
}

/// Respondent race. `White` is the base category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Race {
    White,
    Black,
    Asian,
    Other,
}

/// Highest education attained. `HighSchoolOrLess` is the base category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Education {
    HighSchoolOrLess,
    Associate,
    Bachelor,
    Graduate,
}

/// Annual household income bracket. `Under35k` is the base category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Income {
    Under35k,
    From35kTo75k,
    From75kTo150k,
    Over150k,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    /// Position within the declaration order; 0 is the base category.
    pub fn level(self) -> usize {
        Self::ALL.iter().position(|&g| g == self).unwrap()
    }

    /// Canonical spelling used when writing survey files.
    pub fn label(self) -> &'static str {
        match self {
            Gender::Male => "Male",
            Gender::Female => "Female",
        }
    }
}

impl Race {
    pub const ALL: [Race; 4] = [Race::White, Race::Black, Race::Asian, Race::Other];

    pub fn level(self) -> usize {
        Self::ALL.iter().position(|&r| r == self).unwrap()
    }

    pub fn label(self) -> &'static str {
        match self {
            Race::White => "White",
            Race::Black => "Black",
            Race::Asian => "Asian",
            Race::Other => "Others",
        }
    }
}

impl Education {
    pub const ALL: [Education; 4] = [
        Education::HighSchoolOrLess,
        Education::Associate,
        Education::Bachelor,
        Education::Graduate,
    ];

    pub fn level(self) -> usize {
        Self::ALL.iter().position(|&e| e == self).unwrap()
    }

    pub fn label(self) -> &'static str {
        match self {
            Education::HighSchoolOrLess => "High school graduate or less",
            Education::Associate => "Associate's degree",
            Education::Bachelor => "Bachelor's degree",
            Education::Graduate => "Graduate degree",
        }
    }
}

impl Income {
    pub const ALL: [Income; 4] = [
        Income::Under35k,
        Income::From35kTo75k,
        Income::From75kTo150k,
        Income::Over150k,
    ];

    pub fn level(self) -> usize {
        Self::ALL.iter().position(|&i| i == self).unwrap()
    }

    pub fn label(self) -> &'static str {
        match self {
            Income::Under35k => "Less than $35,000",
            Income::From35kTo75k => "$35,000 to $74,999",
            Income::From75kTo150k => "$75,000 to $149,999",
            Income::Over150k => "$150,000 or above",
        }
    }
}

/// Normalizes a raw cell for lookup: trim, lowercase, collapse runs of
/// whitespace, and drop thousands separators so "$35,000" and "$35000"
/// coincide.
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.trim().chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if ch == ',' {
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.extend(ch.to_lowercase());
    }
    out
}

/// Spelling tables mapping normalized cell values to category levels.
///
/// Defaults cover the canonical survey spellings plus the bare enum names;
/// additional spellings can be registered (e.g. from a config file) without
/// code changes. Unknown spellings do not error at the table level: lookup
/// returns `None` and the caller drops the record.
#[derive(Debug, Clone)]
pub struct LevelMap {
    gender: HashMap<String, Gender>,
    race: HashMap<String, Race>,
    education: HashMap<String, Education>,
    income: HashMap<String, Income>,
    vaccinated: HashMap<String, u8>,
}

impl Default for LevelMap {
    fn default() -> Self {
        let mut m = LevelMap {
            gender: HashMap::new(),
            race: HashMap::new(),
            education: HashMap::new(),
            income: HashMap::new(),
            vaccinated: HashMap::new(),
        };
        for g in Gender::ALL {
            m.add_gender(g.label(), g);
        }
        m.add_gender("M", Gender::Male);
        m.add_gender("F", Gender::Female);

        for r in Race::ALL {
            m.add_race(r.label(), r);
        }
        m.add_race("Other", Race::Other);
        m.add_race("Black or African American", Race::Black);

        for e in Education::ALL {
            m.add_education(e.label(), e);
        }
        m.add_education("HighSchoolOrLess", Education::HighSchoolOrLess);
        m.add_education("Associate", Education::Associate);
        m.add_education("Bachelor", Education::Bachelor);
        m.add_education("Graduate", Education::Graduate);

        for i in Income::ALL {
            m.add_income(i.label(), i);
        }
        m.add_income("Under35k", Income::Under35k);
        m.add_income("From35kTo75k", Income::From35kTo75k);
        m.add_income("From75kTo150k", Income::From75kTo150k);
        m.add_income("Over150k", Income::Over150k);
        m.add_income("$150,000 and above", Income::Over150k);

        for (s, v) in [("Yes", 1u8), ("No", 0), ("1", 1), ("0", 0)] {
            m.add_vaccinated(s, v);
        }
        m
    }
}

impl LevelMap {
    pub fn add_gender(&mut self, spelling: &str, level: Gender) {
        self.gender.insert(normalize(spelling), level);
    }
    pub fn add_race(&mut self, spelling: &str, level: Race) {
        self.race.insert(normalize(spelling), level);
    }
    pub fn add_education(&mut self, spelling: &str, level: Education) {
        self.education.insert(normalize(spelling), level);
    }
    pub fn add_income(&mut self, spelling: &str, level: Income) {
        self.income.insert(normalize(spelling), level);
    }
    pub fn add_vaccinated(&mut self, spelling: &str, value: u8) {
        self.vaccinated.insert(normalize(spelling), value.min(1));
    }

    pub fn gender(&self, raw: &str) -> Option<Gender> {
        self.gender.get(&normalize(raw)).copied()
    }
    pub fn race(&self, raw: &str) -> Option<Race> {
        self.race.get(&normalize(raw)).copied()
    }
    pub fn education(&self, raw: &str) -> Option<Education> {
        self.education.get(&normalize(raw)).copied()
    }
    pub fn income(&self, raw: &str) -> Option<Income> {
        self.income.get(&normalize(raw)).copied()
    }
    pub fn vaccinated(&self, raw: &str) -> Option<u8> {
        self.vaccinated.get(&normalize(raw)).copied()
    }
}
