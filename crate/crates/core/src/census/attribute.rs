//! Stand-ins for the protected attribute when the auditor cannot observe it.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{CensusRow, Sex, TabularDataset};
use super::CensusError;
use crate::seeds::{derive_seed, Stream};

/// Name to probability of the name belonging to a man.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, f64)>", into = "Vec<(String, f64)>")]
pub struct NameTable {
    entries: Vec<(String, f64)>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<(String, f64)>> for NameTable {
    type Error = CensusError;

    fn try_from(entries: Vec<(String, f64)>) -> Result<Self, CensusError> {
        NameTable::new(entries)
    }
}

impl From<NameTable> for Vec<(String, f64)> {
    fn from(table: NameTable) -> Self {
        table.entries
    }
}

#[derive(Deserialize)]
struct NameRecord {
    name: String,
    p_male: f64,
}

impl NameTable {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self, CensusError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (name, p)) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(CensusError::InvalidProbability(*p));
            }
            index.insert(name.to_ascii_lowercase(), i);
        }
        Ok(NameTable { entries, index })
    }

    /// CSV with header `name,p_male`.
    pub fn from_reader<R: Read>(input: R) -> Result<Self, CensusError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let entries = reader
            .deserialize::<NameRecord>()
            .map(|r| r.map(|r| (r.name, r.p_male)))
            .collect::<Result<_, _>>()?;
        NameTable::new(entries)
    }

    pub fn from_path(path: &Path) -> Result<Self, CensusError> {
        NameTable::from_reader(std::fs::File::open(path)?)
    }

    pub fn p_male(&self, name: &str) -> Option<f64> {
        self.index.get(&name.to_ascii_lowercase()).map(|&i| self.entries[i].1)
    }

    /// Majority sex for a name; an even split counts as male.
    pub fn majority(&self, name: &str) -> Option<Sex> {
        self.p_male(name).map(|p| if p >= 0.5 { Sex::Male } else { Sex::Female })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Gives every row a name drawn with weight `P(name | sex)`, taking the
    /// names as equally common overall.
    pub fn assign_names(&self, data: &mut TabularDataset, seed: u64) -> Result<(), CensusError> {
        let weight = |sex: Sex, p: f64| if sex == Sex::Male { p } else { 1.0 - p };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for sex in [Sex::Female, Sex::Male] {
            let total: f64 = self.entries.iter().map(|(_, p)| weight(sex, *p)).sum();
            if total <= 0.0 && data.rows.iter().any(|r| r.sex == sex) {
                return Err(CensusError::NoNameFor(sex));
            }
        }
        for row in &mut data.rows {
            let total: f64 = self.entries.iter().map(|(_, p)| weight(row.sex, *p)).sum();
            let mut u = rng.random_range(0.0..total);
            let mut pick = self.entries.len() - 1;
            for (i, (_, p)) in self.entries.iter().enumerate() {
                let w = weight(row.sex, *p);
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            row.name_token = Some(self.entries[pick].0.clone());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttributeProxy {
    /// Reports the true sex, flipped independently per row with
    /// probability `error_rate`.
    NoisyChannel { error_rate: f64, seed: u64 },
    /// Majority sex of the row's name.
    Table { names: NameTable },
}

impl AttributeProxy {
    pub fn noisy(error_rate: f64, seed: u64) -> Result<Self, CensusError> {
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(CensusError::InvalidProbability(error_rate));
        }
        Ok(AttributeProxy::NoisyChannel { error_rate, seed })
    }

    /// Proxy sex of the row at position `index`. The noisy channel draws
    /// from `(seed, index)` alone, so the answer ignores row order elsewhere.
    pub fn proxy_sex(&self, row: &CensusRow, index: usize) -> Result<Sex, CensusError> {
        match self {
            AttributeProxy::NoisyChannel { error_rate, seed } => {
                let u = (derive_seed(*seed, Stream::Proxy, index as u64) >> 11) as f64 / (1u64 << 53) as f64;
                Ok(if u < *error_rate { row.sex.flip() } else { row.sex })
            }
            AttributeProxy::Table { names: table } => {
                let name = row.name_token.as_deref().ok_or(CensusError::MissingField("name"))?;
                table.majority(name).ok_or_else(|| CensusError::UnknownName(name.to_string()))
            }
        }
    }

    pub fn proxy_all(&self, data: &TabularDataset) -> Result<Vec<Sex>, CensusError> {
        data.rows.iter().enumerate().map(|(i, r)| self.proxy_sex(r, i)).collect()
    }

    /// Share of rows where the proxy matches the true sex.
    pub fn agreement(&self, data: &TabularDataset) -> Result<f64, CensusError> {
        if data.is_empty() {
            return Err(CensusError::EmptyInput);
        }
        let proxied = self.proxy_all(data)?;
        let same = data.rows.iter().zip(&proxied).filter(|(r, s)| r.sex == **s).count();
        Ok(same as f64 / data.len() as f64)
    }
}
