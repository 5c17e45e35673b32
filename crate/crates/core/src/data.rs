//! Dataset ingestion and reproducible splitting.
//!
//! Two layouts are supported:
//!
//! * the houses dataset: a directory holding one whitespace-separated
//!   attribute file (`HousesInfo.txt`, rows `bedrooms bathrooms area zipcode
//!   price`, house ids counting from 1 in row order) next to four photos per
//!   house named `<id>_<role>.<ext>` with role one of `frontal`, `bedroom`,
//!   `kitchen`, `bathroom`;
//! * plain numeric tables (comma- or whitespace-delimited, optional header)
//!   such as the 506-row Boston housing file.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ATTRIBUTE_FILE: &str = "HousesInfo.txt";
const IMAGE_EXTENSIONS: [&str; 4] = ["jpg", "jpeg", "png", "JPG"];

/// The four photos taken of every house, in feature-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageRole {
    Frontal,
    Bedroom,
    Kitchen,
    Bathroom,
}

impl ImageRole {
    pub const ALL: [ImageRole; 4] = [
        ImageRole::Frontal,
        ImageRole::Bedroom,
        ImageRole::Kitchen,
        ImageRole::Bathroom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ImageRole::Frontal => "frontal",
            ImageRole::Bedroom => "bedroom",
            ImageRole::Kitchen => "kitchen",
            ImageRole::Bathroom => "bathroom",
        }
    }
}

impl fmt::Display for ImageRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseRecord {
    pub id: u32,
    pub image_paths: BTreeMap<ImageRole, PathBuf>,
    pub bedrooms: f64,
    pub bathrooms: f64,
    /// Square feet.
    pub area: f64,
    pub zipcode: u32,
    /// USD.
    pub price: f64,
}

impl HouseRecord {
    /// Textual attributes in feature-vector order.
    pub fn textual(&self) -> [f64; 4] {
        [self.bedrooms, self.bathrooms, self.area, f64::from(self.zipcode)]
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.price > 0.0) {
            return Err(format!("price must be positive, got {}", self.price));
        }
        if !(self.area > 0.0) {
            return Err(format!("area must be positive, got {}", self.area));
        }
        if !(self.bedrooms >= 1.0) {
            return Err(format!("need at least one bedroom, got {}", self.bedrooms));
        }
        if !(self.bathrooms >= 1.0) {
            return Err(format!("need at least one bathroom, got {}", self.bathrooms));
        }
        Ok(())
    }
}

fn find_attribute_file(root: &Path) -> Result<PathBuf> {
    let direct = root.join(ATTRIBUTE_FILE);
    if direct.is_file() {
        return Ok(direct);
    }
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut txt: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    txt.sort();
    match txt.len() {
        1 => Ok(txt.remove(0)),
        0 => Err(Error::Data(format!(
            "no attribute file ({ATTRIBUTE_FILE}) in {}",
            root.display()
        ))),
        _ => Err(Error::Data(format!(
            "several .txt files in {} and none named {ATTRIBUTE_FILE}",
            root.display()
        ))),
    }
}

/// Loads the image+text houses dataset from `root`.
pub fn load_houses_dataset(root: &Path) -> Result<Vec<HouseRecord>> {
    let attr_path = find_attribute_file(root)?;
    let text = std::fs::read_to_string(&attr_path).map_err(|e| Error::io(&attr_path, e))?;

    let mut files: HashMap<String, Vec<PathBuf>> = HashMap::new();
    for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        let (Some(stem), Some(ext)) = (path.file_stem(), path.extension()) else {
            continue;
        };
        if IMAGE_EXTENSIONS.iter().any(|x| ext == *x) {
            files
                .entry(stem.to_string_lossy().into_owned())
                .or_default()
                .push(path);
        }
    }

    let parse_err = |line: usize, message: String| Error::Parse {
        path: attr_path.clone(),
        line,
        message,
    };

    let mut houses = Vec::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(
                lineno,
                format!("expected 5 fields (bedrooms bathrooms area zipcode price), got {}", fields.len()),
            ));
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(lineno, format!("bad {name} value {:?}", fields[i])))
        };
        let bedrooms = num(0, "bedrooms")?;
        let bathrooms = num(1, "bathrooms")?;
        let area = num(2, "area")?;
        let zipcode = fields[3]
            .parse::<u32>()
            .map_err(|_| parse_err(lineno, format!("bad zipcode {:?}", fields[3])))?;
        let price = num(4, "price")?;

        let id = houses.len() as u32 + 1;
        let mut image_paths = BTreeMap::new();
        for role in ImageRole::ALL {
            let key = format!("{id}_{role}");
            match files.get(&key).map(Vec::as_slice) {
                None | Some([]) => {
                    return Err(Error::MissingImage {
                        id,
                        role: role.to_string(),
                    })
                }
                Some([p]) => {
                    image_paths.insert(role, p.clone());
                }
                Some(many) => {
                    return Err(Error::Data(format!(
                        "duplicate images for house {id} role {role}: {}",
                        many.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
                    )))
                }
            }
        }
        let house = HouseRecord {
            id,
            image_paths,
            bedrooms,
            bathrooms,
            area,
            zipcode,
            price,
        };
        house.validate().map_err(|m| parse_err(lineno, m))?;
        houses.push(house);
    }
    if houses.is_empty() {
        return Err(Error::Data(format!("{} holds no houses", attr_path.display())));
    }
    Ok(houses)
}

/// Mean, minimum and maximum of one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut sum, mut n) = (0.0, 0usize);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            sum += v;
            n += 1;
            min = min.min(v);
            max = max.max(v);
        }
        Self {
            mean: sum / n as f64,
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub houses: usize,
    pub price: Summary,
    pub area: Summary,
    pub bedrooms: Summary,
    pub bathrooms: Summary,
}

pub fn dataset_stats(houses: &[HouseRecord]) -> DatasetStats {
    DatasetStats {
        houses: houses.len(),
        price: Summary::of(houses.iter().map(|h| h.price)),
        area: Summary::of(houses.iter().map(|h| h.area)),
        bedrooms: Summary::of(houses.iter().map(|h| h.bedrooms)),
        bathrooms: Summary::of(houses.iter().map(|h| h.bathrooms)),
    }
}

/// A purely numeric table with one target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub provenance: String,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Which column of a table holds the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for TargetColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "last" => TargetColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => TargetColumn::Index(i),
                Err(_) => TargetColumn::Name(s.to_string()),
            },
        })
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Loads a comma- or whitespace-delimited numeric table. A first row with
/// any non-numeric cell is taken as the header.
pub fn load_tabular_csv(path: &Path, target: &TargetColumn) -> Result<TabularDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    let first = lines
        .peek()
        .map(|(_, l)| split_fields(l))
        .ok_or_else(|| Error::Data(format!("{} is empty", path.display())))?;
    let has_header = first.iter().any(|c| c.parse::<f64>().is_err() && !c.is_empty());
    let width = first.len();
    let names: Vec<String> = if has_header {
        let names = first.iter().map(|s| s.to_string()).collect();
        lines.next();
        names
    } else {
        (0..width).map(|i| format!("x{i}")).collect()
    };

    let target_idx = match target {
        TargetColumn::Last => width - 1,
        TargetColumn::Index(i) if *i < width => *i,
        TargetColumn::Index(i) => {
            return Err(Error::Data(format!("target column {i} out of range (width {width})")))
        }
        TargetColumn::Name(n) => names
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| Error::Data(format!("no column named {n:?}")))?,
    };
    if width < 2 {
        return Err(Error::Data("need at least one feature and one target column".into()));
    }

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (lineno, line) in lines {
        let cells = split_fields(line);
        if cells.len() != width {
            return Err(parse_err(lineno, format!("expected {width} cells, got {}", cells.len())));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (col, cell) in cells.iter().enumerate() {
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_err(
                        lineno,
                        format!("column {} ({}): missing or non-numeric cell {cell:?}", col + 1, names[col]),
                    )
                })?;
            if col == target_idx {
                targets.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }

    let mut feature_names = names;
    feature_names.remove(target_idx);
    Ok(TabularDataset {
        feature_names,
        rows,
        targets,
        provenance: path.display().to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitScheme {
    TrainTest,
    TrainValTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub scheme: SplitScheme,
}

impl SplitSpec {
    /// 80% train, 20% test.
    pub fn train_test(seed: u64) -> Self {
        Self {
            fractions: vec![0.8, 0.2],
            seed,
            scheme: SplitScheme::TrainTest,
        }
    }

    /// 70% train, 15% validation, 15% test.
    pub fn train_val_test(seed: u64) -> Self {
        Self {
            fractions: vec![0.7, 0.15, 0.15],
            seed,
            scheme: SplitScheme::TrainValTest,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.scheme {
            SplitScheme::TrainTest => 2,
            SplitScheme::TrainValTest => 3,
        };
        if self.fractions.len() != expected {
            return Err(Error::Argument(format!(
                "{:?} needs {expected} fractions, got {}",
                self.scheme,
                self.fractions.len()
            )));
        }
        if self.fractions.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::Argument("split fractions must be positive".into()));
        }
        let total: f64 = self.fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("split fractions sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Part sizes by largest-remainder rounding; ties go to the earlier part.
pub fn split_sizes(n: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - sizes[a] as f64;
        let rb = quotas[b] - sizes[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Seeded shuffle of `0..n` cut into consecutive parts of [`split_sizes`].
/// Each part is returned in ascending index order.
pub fn split(n: usize, spec: &SplitSpec) -> Result<Vec<Vec<usize>>> {
    spec.validate()?;
    if n < spec.fractions.len() {
        return Err(Error::Argument(format!(
            "cannot split {n} samples into {} parts",
            spec.fractions.len()
        )));
    }
    let sizes = split_sizes(n, &spec.fractions);
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Argument(format!("split part {i} of {n} samples would be empty")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut parts = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for s in sizes {
        let mut part = idx[start..start + s].to_vec();
        part.sort_unstable();
        parts.push(part);
        start += s;
    }
    Ok(parts)
}
