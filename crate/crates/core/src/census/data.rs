//! Census income rows: ingestion of the UCI Adult layout and a synthetic
//! generator with a planted sex bias.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::CensusError;

/// Retained numeric features, in model order.
pub const FEATURE_NAMES: [&str; 5] = [
    "age",
    "education-num",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub fn flip(self) -> Sex {
        match self {
            Sex::Female => Sex::Male,
            Sex::Male => Sex::Female,
        }
    }

    pub fn as_feature(self) -> f64 {
        match self {
            Sex::Female => 0.0,
            Sex::Male => 1.0,
        }
    }

    fn parse(s: &str) -> Option<Sex> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" | "1" => Some(Sex::Male),
            "female" | "f" | "0" => Some(Sex::Female),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub features: [f64; 5],
    pub sex: Sex,
    pub name_token: Option<String>,
    /// Income above 50K.
    pub label: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub rows: Vec<CensusRow>,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn concat(mut self, other: TabularDataset) -> TabularDataset {
        self.rows.extend(other.rows);
        self
    }
}

/// Column layout of an input file.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensusSchema {
    /// Headerless 15-column UCI Adult release (`adult.data`, `adult.test`).
    UciAdult,
    /// First row names the columns; needs the five features, `sex` and a
    /// label column (`income` or `class`); `name` is optional.
    Header,
}

impl std::str::FromStr for CensusSchema {
    type Err = CensusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uci-adult" | "uci" => Ok(CensusSchema::UciAdult),
            "header" => Ok(CensusSchema::Header),
            other => Err(CensusError::UnknownSchema(other.to_string())),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub schema: CensusSchema,
    /// Ingestion fails when more than this share of rows is dropped.
    pub max_drop_fraction: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            schema: CensusSchema::UciAdult,
            max_drop_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub raw_rows: usize,
    pub kept_rows: usize,
    pub dropped_rows: usize,
    /// 1-based record numbers of dropped rows with the reason.
    pub drops: Vec<(usize, String)>,
}

struct Columns {
    features: [usize; 5],
    sex: usize,
    label: Option<usize>,
    name: Option<usize>,
    width: Option<usize>,
}

impl Columns {
    fn uci() -> Self {
        Columns {
            features: [0, 4, 10, 11, 12],
            sex: 9,
            label: Some(14),
            name: None,
            width: Some(15),
        }
    }

    fn from_header(header: &csv::StringRecord) -> Result<Self, CensusError> {
        let find = |names: &[&str]| {
            header
                .iter()
                .position(|h| names.contains(&h.trim().to_ascii_lowercase().as_str()))
        };
        let mut features = [0; 5];
        for (slot, name) in features.iter_mut().zip(FEATURE_NAMES) {
            let alt = name.replace('-', "_");
            *slot = find(&[name, alt.as_str()])
                .ok_or_else(|| CensusError::UnknownSchema(format!("missing column `{name}`")))?;
        }
        Ok(Columns {
            features,
            sex: find(&["sex", "gender"])
                .ok_or_else(|| CensusError::UnknownSchema("missing column `sex`".into()))?,
            label: find(&["income", "class", "label"]),
            name: find(&["name", "first_name"]),
            width: None,
        })
    }
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().trim_end_matches('.') {
        ">50K" | "1" => Some(true),
        "<=50K" | "0" => Some(false),
        _ => None,
    }
}

fn parse_row(record: &csv::StringRecord, cols: &Columns) -> Result<CensusRow, String> {
    if let Some(width) = cols.width {
        if record.len() != width {
            return Err(format!("expected {width} fields, found {}", record.len()));
        }
    }
    let field = |i: usize| -> Result<&str, String> {
        let v = record.get(i).ok_or_else(|| format!("missing field {i}"))?.trim();
        if v.is_empty() || v == "?" {
            Err(format!("missing value in field {i}"))
        } else {
            Ok(v)
        }
    };
    let mut features = [0.0; 5];
    for (slot, (&i, name)) in features.iter_mut().zip(cols.features.iter().zip(FEATURE_NAMES)) {
        *slot = field(i)?
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("non-numeric {name}"))?;
    }
    let sex = Sex::parse(field(cols.sex)?).ok_or("unknown sex value")?;
    let label = match cols.label {
        Some(i) => Some(parse_label(field(i)?).ok_or("unknown income label")?),
        None => None,
    };
    let name_token = cols
        .name
        .and_then(|i| record.get(i))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string);
    Ok(CensusRow {
        features,
        sex,
        name_token,
        label,
    })
}

/// Reads census rows from CSV text.
pub fn ingest_census_reader<R: Read>(
    input: R,
    options: &IngestOptions,
) -> Result<(TabularDataset, IngestReport), CensusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.schema == CensusSchema::Header)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'|'))
        .from_reader(input);
    let cols = match options.schema {
        CensusSchema::UciAdult => Columns::uci(),
        CensusSchema::Header => Columns::from_header(reader.headers()?)?,
    };

    let mut data = TabularDataset::default();
    let mut report = IngestReport::default();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        report.raw_rows += 1;
        match parse_row(&record, &cols) {
            Ok(row) => data.rows.push(row),
            Err(reason) => report.drops.push((i + 1, reason)),
        }
    }
    report.kept_rows = data.rows.len();
    report.dropped_rows = report.drops.len();
    if report.raw_rows == 0 {
        return Err(CensusError::EmptyInput);
    }
    if report.dropped_rows as f64 > options.max_drop_fraction * report.raw_rows as f64 {
        return Err(CensusError::TooManyMalformed {
            dropped: report.dropped_rows,
            raw: report.raw_rows,
        });
    }
    Ok((data, report))
}

pub fn ingest_census_csv(
    path: &Path,
    options: &IngestOptions,
) -> Result<(TabularDataset, IngestReport), CensusError> {
    ingest_census_reader(File::open(path)?, options)
}

/// Adult-shaped synthetic rows. As in the census data, men work longer
/// hours and report capital gains more often; `bias` is added on top to the
/// log-odds of a high income for men.
pub fn synthetic_census(n: usize, bias: f64, seed: u64) -> TabularDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hours_men = Normal::<f64>::new(43.0, 11.0).expect("valid normal");
    let hours_women = Normal::<f64>::new(36.0, 11.0).expect("valid normal");
    let gain = Exp::<f64>::new(1.0 / 8000.0).expect("valid rate");
    let loss = Exp::<f64>::new(1.0 / 1800.0).expect("valid rate");
    let rows = (0..n)
        .map(|_| {
            let sex = if rng.random_bool(0.67) { Sex::Male } else { Sex::Female };
            let male = sex == Sex::Male;
            let age = rng.random_range(17..=90) as f64;
            let education = rng.random_range(1..=16) as f64;
            let gain_share = if male { 0.10 } else { 0.04 };
            let capital_gain = if rng.random_bool(gain_share) { gain.sample(&mut rng).round() } else { 0.0 };
            let capital_loss = if rng.random_bool(0.05) { loss.sample(&mut rng).round() } else { 0.0 };
            let hours = if male { &hours_men } else { &hours_women };
            let hours_per_week = hours.sample(&mut rng).clamp(1.0, 99.0).round();
            let logit = -8.0
                + 0.03 * age
                + 0.3 * education
                + 0.0003 * capital_gain
                + 0.0005 * capital_loss
                + 0.05 * hours_per_week
                + bias * sex.as_feature();
            let p = 1.0 / (1.0 + (-logit).exp());
            CensusRow {
                features: [age, education, capital_gain, capital_loss, hours_per_week],
                sex,
                name_token: None,
                label: Some(rng.random_bool(p)),
            }
        })
        .collect();
    TabularDataset { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UCI_SAMPLE: &str = "\
|1x3 Cross validator
25, Private, 226802, 11th, 7, Never-married, Machine-op-inspct, Own-child, Black, Male, 0, 0, 40, United-States, <=50K.
38, Private, 89814, HS-grad, 9, Married-civ-spouse, Farming-fishing, Husband, White, Male, 0, 0, 50, United-States, <=50K.
28, Local-gov, 336951, Assoc-acdm, 12, Married-civ-spouse, Protective-serv, Husband, White, Male, 0, 0, 40, United-States, >50K.
44, Private, 160323, Some-college, 10, Married-civ-spouse, Machine-op-inspct, Husband, Black, Male, 7688, 0, 40, United-States, >50K.
18, ?, 103497, Some-college, 10, Never-married, ?, Own-child, White, Female, 0, 0, 30, United-States, <=50K.
34, Private, 198693, 10th, 6, Never-married, Other-service, Not-in-family, White, Male, 0, 0, 30, United-States, <=50K.
29, ?, 227026, HS-grad, 9, Never-married, ?, Unmarried, Black, Male, 0, 0, 40, United-States, <=50K.
63, Self-emp-not-inc, 104626, Prof-school, 15, Married-civ-spouse, Prof-specialty, Husband, White, Male, 3103, 0, 32, United-States, >50K.
24, Private, 369667, Some-college, 10, Never-married, Other-service, Unmarried, White, Female, 0, 0, forty, United-States, <=50K.
55, Private, 104996, 7th-8th, 4, Married-civ-spouse, Craft-repair, Husband, White, Male, 0, 0, 10, United-States, <=50K.

";

    #[test]
    fn ingests_uci_layout_and_drops_malformed_rows() {
        let (data, report) = ingest_census_reader(UCI_SAMPLE.as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(report.raw_rows, 10);
        assert_eq!(report.kept_rows, 9);
        assert_eq!(report.dropped_rows, 1);
        assert_eq!(report.drops[0].0, 9);
        assert_eq!(data.rows[0].features, [25.0, 7.0, 0.0, 0.0, 40.0]);
        assert_eq!(data.rows[0].sex, Sex::Male);
        assert_eq!(data.rows[0].label, Some(false));
        assert_eq!(data.rows[2].label, Some(true));
        assert_eq!(data.rows[4].sex, Sex::Female);
    }

    #[test]
    fn rejects_empty_and_too_dirty_inputs() {
        assert!(matches!(
            ingest_census_reader("".as_bytes(), &IngestOptions::default()),
            Err(CensusError::EmptyInput)
        ));
        let strict = IngestOptions {
            max_drop_fraction: 0.05,
            ..IngestOptions::default()
        };
        assert!(matches!(
            ingest_census_reader(UCI_SAMPLE.as_bytes(), &strict),
            Err(CensusError::TooManyMalformed { dropped: 1, raw: 10 })
        ));
    }

    #[test]
    fn header_schema_with_names() {
        let text = "age,education-num,capital-gain,capital-loss,hours-per-week,sex,income,name\n\
                    30,13,0,0,40,Female,>50K,Mary\n41,9,0,0,45,Male,<=50K,John\n";
        let opts = IngestOptions {
            schema: CensusSchema::Header,
            ..IngestOptions::default()
        };
        let (data, _) = ingest_census_reader(text.as_bytes(), &opts).unwrap();
        assert_eq!(data.rows[0].name_token.as_deref(), Some("Mary"));
        assert_eq!(data.rows[1].label, Some(false));
        let missing = "age,sex\n30,Male\n";
        assert!(matches!(
            ingest_census_reader(missing.as_bytes(), &opts),
            Err(CensusError::UnknownSchema(_))
        ));
        assert!("xml".parse::<CensusSchema>().is_err());
    }

    #[test]
    fn synthetic_rows_are_deterministic() {
        let a = synthetic_census(500, 1.5, 3);
        assert_eq!(a, synthetic_census(500, 1.5, 3));
        assert_ne!(a, synthetic_census(500, 1.5, 4));
        let men = a.rows.iter().filter(|r| r.sex == Sex::Male).count();
        assert!((280..=390).contains(&men), "{men}");
    }
}
