//! Run configuration: defaults, key=value config file, command-line
//! overrides (flags win over the file, the file wins over defaults), and a
//! digest embedded in every artifact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use uptake_core::cluster::Linkage;
use uptake_core::survey::states::default_roster;
use uptake_core::survey::{ColumnMap, Education, Gender, Income, LevelMap, Race};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub survey_file: Option<PathBuf>,
    pub county_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub chains: usize,
    pub iterations: usize,
    pub warmup_fraction: f64,
    pub target_accept: f64,
    pub leapfrog_steps: usize,
    pub beta_prior_scale: f64,
    pub sigma_alpha_prior_scale: f64,
    pub linkage: Linkage,
    pub k_max: usize,
    pub gap_draws: usize,
    pub workers: usize,
    pub columns: ColumnMap,
    pub levels: LevelMap,
    pub roster: Vec<String>,
    /// level spellings registered beyond the defaults, kept for the digest
    extra_levels: Vec<(String, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            survey_file: None,
            county_file: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            chains: 2,
            iterations: 10_000,
            warmup_fraction: 0.5,
            target_accept: 0.8,
            leapfrog_steps: 32,
            beta_prior_scale: 5.0,
            sigma_alpha_prior_scale: 2.5,
            linkage: Linkage::Ward,
            k_max: 8,
            gap_draws: 100,
            workers: 0,
            columns: ColumnMap::default(),
            levels: LevelMap::default(),
            roster: default_roster(),
            extra_levels: Vec::new(),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are
/// skipped. Later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{raw}'", lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| anyhow!("config key '{key}': {e}"))
}

fn register_level(levels: &mut LevelMap, field: &str, level: &str, spellings: &str) -> Result<()> {
    for spelling in spellings.split('|').map(str::trim).filter(|s| !s.is_empty()) {
        match field {
            "gender" => {
                let l = match level {
                    "male" => Gender::Male,
                    "female" => Gender::Female,
                    other => bail!("unknown gender level '{other}'"),
                };
                levels.add_gender(spelling, l);
            }
            "race" => {
                let l = match level {
                    "white" => Race::White,
                    "black" => Race::Black,
                    "asian" => Race::Asian,
                    "other" => Race::Other,
                    other => bail!("unknown race level '{other}'"),
                };
                levels.add_race(spelling, l);
            }
            "education" => {
                let l = match level {
                    "highschoolorless" => Education::HighSchoolOrLess,
                    "associate" => Education::Associate,
                    "bachelor" => Education::Bachelor,
                    "graduate" => Education::Graduate,
                    other => bail!("unknown education level '{other}'"),
                };
                levels.add_education(spelling, l);
            }
            "income" => {
                let l = match level {
                    "under35k" => Income::Under35k,
                    "from35kto75k" => Income::From35kTo75k,
                    "from75kto150k" => Income::From75kTo150k,
                    "over150k" => Income::Over150k,
                    other => bail!("unknown income level '{other}'"),
                };
                levels.add_income(spelling, l);
            }
            "vaccinated" => {
                let v = match level {
                    "yes" => 1u8,
                    "no" => 0u8,
                    other => bail!("unknown vaccinated level '{other}'"),
                };
                levels.add_vaccinated(spelling, v);
            }
            other => bail!("unknown level field '{other}'"),
        }
    }
    Ok(())
}

impl RunConfig {
    /// Applies a config file's entries over the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let entries = parse_key_values(&text)?;
        for (key, value) in entries {
            self.apply_entry(&key, &value)?;
        }
        Ok(())
    }

    fn apply_entry(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "survey_file" => self.survey_file = Some(PathBuf::from(value)),
            "county_file" => self.county_file = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = parse_as(key, value)?,
            "chains" => self.chains = parse_as(key, value)?,
            "iterations" => self.iterations = parse_as(key, value)?,
            "warmup_fraction" => self.warmup_fraction = parse_as(key, value)?,
            "target_accept" => self.target_accept = parse_as(key, value)?,
            "leapfrog_steps" => self.leapfrog_steps = parse_as(key, value)?,
            "beta_prior_scale" => self.beta_prior_scale = parse_as(key, value)?,
            "sigma_alpha_prior_scale" => self.sigma_alpha_prior_scale = parse_as(key, value)?,
            "linkage" => self.linkage = value.parse::<Linkage>().map_err(|e| anyhow!(e))?,
            "k_max" => self.k_max = parse_as(key, value)?,
            "gap_draws" => self.gap_draws = parse_as(key, value)?,
            "workers" => self.workers = parse_as(key, value)?,
            "roster" => {
                let roster: Vec<String> =
                    value.split(',').map(|s| s.trim().to_ascii_uppercase()).collect();
                if roster.is_empty() || roster.iter().any(String::is_empty) {
                    bail!("config key 'roster': empty state code");
                }
                self.roster = roster;
                self.roster.sort();
                self.roster.dedup();
            }
            _ if key.starts_with("columns.") => {
                let field = &key["columns.".len()..];
                let slot = match field {
                    "gender" => &mut self.columns.gender,
                    "race" => &mut self.columns.race,
                    "education" => &mut self.columns.education,
                    "income" => &mut self.columns.income,
                    "state" => &mut self.columns.state,
                    "vaccinated" => &mut self.columns.vaccinated,
                    other => bail!("unknown column mapping '{other}'"),
                };
                *slot = value.to_string();
            }
            _ if key.starts_with("levels.") => {
                let rest = &key["levels.".len()..];
                let (field, level) = rest
                    .split_once('.')
                    .ok_or_else(|| anyhow!("level key must be levels.<field>.<level>"))?;
                register_level(&mut self.levels, field, &level.to_ascii_lowercase(), value)?;
                self.extra_levels.push((key.to_string(), value.to_string()));
            }
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    /// Canonical text of everything that can influence results, used for
    /// the digest. Output paths and worker counts are excluded because they
    /// do not change any computed value.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("beta_prior_scale", self.beta_prior_scale.to_string());
        put("chains", self.chains.to_string());
        put(
            "columns",
            format!(
                "{}|{}|{}|{}|{}|{}",
                self.columns.gender,
                self.columns.race,
                self.columns.education,
                self.columns.income,
                self.columns.state,
                self.columns.vaccinated
            ),
        );
        put("county_file", path_str(&self.county_file));
        put("gap_draws", self.gap_draws.to_string());
        put("iterations", self.iterations.to_string());
        put("k_max", self.k_max.to_string());
        put("leapfrog_steps", self.leapfrog_steps.to_string());
        put("linkage", format!("{:?}", self.linkage));
        for (k, v) in &self.extra_levels {
            put(k, v.clone());
        }
        put("roster", self.roster.join(","));
        put("seed", self.seed.to_string());
        put("sigma_alpha_prior_scale", self.sigma_alpha_prior_scale.to_string());
        put("survey_file", path_str(&self.survey_file));
        put("target_accept", self.target_accept.to_string());
        put("warmup_fraction", self.warmup_fraction.to_string());
        s
    }

    /// FNV-1a digest of the canonical configuration.
    pub fn digest(&self) -> String {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for b in self.canonical_text().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
        format!("{h:016x}")
    }

    /// Header comments embedded in every artifact.
    pub fn provenance(&self) -> Vec<(String, String)> {
        vec![
            ("seed".to_string(), self.seed.to_string()),
            ("config".to_string(), self.digest()),
        ]
    }
}

fn path_str(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}
