//! Asset records, the delimited asset file format, and proximity queries.
//!
//! The file format is UTF-8 CSV with a mandatory header line
//! `asset_id,title,county,latitude,longitude,book_value_cents,loan_reference`.
//! Ingest is partial: each bad record is rejected on its own and reported
//! with its line number; everything else is inserted.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::geo::{GeoError, GeoPoint};
use crate::types::{AssetId, Cents};

pub const ASSET_FILE_HEADER: [&str; 7] = [
    "asset_id",
    "title",
    "county",
    "latitude",
    "longitude",
    "book_value_cents",
    "loan_reference",
];

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AssetStatus {
    Registered,
    MarketOpen,
    Settled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub asset_id: AssetId,
    pub title: String,
    pub county: String,
    pub latitude: f64,
    pub longitude: f64,
    pub book_value: Cents,
    pub loan_reference: String,
    pub status: AssetStatus,
}

impl Asset {
    pub fn location(&self) -> GeoPoint {
        GeoPoint {
            latitude: self.latitude,
            longitude: self.longitude,
        }
    }

    /// Checks the per-record invariants; the registry checks uniqueness.
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.asset_id.as_str().trim().is_empty() {
            return Err(RecordError::EmptyField("asset_id"));
        }
        if self.county.trim().is_empty() {
            return Err(RecordError::EmptyField("county"));
        }
        GeoPoint::new(self.latitude, self.longitude)?;
        if !self.book_value.is_positive() {
            return Err(RecordError::NonPositiveBookValue(self.book_value.0));
        }
        Ok(())
    }
}

/// Why a single record was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("field `{field}` is not a valid number: `{value}`")]
    NotANumber { field: &'static str, value: String },
    #[error(transparent)]
    Coordinates(#[from] GeoError),
    #[error("book value must be positive, got {0} cents")]
    NonPositiveBookValue(i64),
    #[error("duplicate asset_id `{0}`")]
    Duplicate(AssetId),
    #[error("record is not valid UTF-8")]
    Encoding,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("asset stream unreadable: {0}")]
    Io(#[from] std::io::Error),
    #[error("asset stream unreadable: {0}")]
    Csv(String),
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown asset `{0}`")]
    UnknownAsset(AssetId),
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error(transparent)]
    Center(#[from] GeoError),
    #[error(transparent)]
    Record(#[from] RecordError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub accepted: Vec<AssetId>,
    pub rejected: Vec<Rejection>,
}

impl IngestReport {
    pub fn accepted_count(&self) -> usize {
        self.accepted.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetRegistry {
    assets: BTreeMap<AssetId, Asset>,
    pub schema_version: u32,
}

impl Default for AssetRegistry {
    fn default() -> Self {
        Self {
            assets: BTreeMap::new(),
            schema_version: SCHEMA_VERSION,
        }
    }
}

impl AssetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn get(&self, id: &AssetId) -> Option<&Asset> {
        self.assets.get(id)
    }

    pub(crate) fn get_mut(&mut self, id: &AssetId) -> Option<&mut Asset> {
        self.assets.get_mut(id)
    }

    /// Assets in canonical (asset_id ascending) order.
    pub fn iter(&self) -> impl Iterator<Item = &Asset> {
        self.assets.values()
    }

    pub fn insert(&mut self, asset: Asset) -> Result<(), RecordError> {
        asset.validate()?;
        if self.assets.contains_key(&asset.asset_id) {
            return Err(RecordError::Duplicate(asset.asset_id));
        }
        self.assets.insert(asset.asset_id.clone(), asset);
        Ok(())
    }

    /// Parses `input` and inserts every valid record.
    pub fn ingest<R: Read>(&mut self, input: R) -> Result<IngestReport, IngestError> {
        let parsed = parse_asset_file(input)?;
        let mut report = IngestReport::default();
        for (line, record) in parsed {
            match record.and_then(|asset| {
                let id = asset.asset_id.clone();
                self.insert(asset).map(|_| id)
            }) {
                Ok(id) => report.accepted.push(id),
                Err(err) => report.rejected.push(Rejection {
                    line,
                    reason: err.to_string(),
                }),
            }
        }
        Ok(report)
    }

    /// Writes all assets in canonical order using the ingest file format.
    pub fn export<W: Write>(&self, out: W) -> Result<(), std::io::Error> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(ASSET_FILE_HEADER)?;
        for a in self.assets.values() {
            writer.write_record([
                a.asset_id.as_str(),
                &a.title,
                &a.county,
                &a.latitude.to_string(),
                &a.longitude.to_string(),
                &a.book_value.0.to_string(),
                &a.loan_reference,
            ])?;
        }
        writer.flush()
    }

    /// Assets within `radius_km` of `center`, nearest first, ties by asset_id.
    pub fn nearby(
        &self,
        center: GeoPoint,
        radius_km: f64,
    ) -> Result<Vec<(&Asset, f64)>, RegistryError> {
        let center = GeoPoint::new(center.latitude, center.longitude)?;
        if radius_km.is_nan() || radius_km < 0.0 {
            return Err(RegistryError::NegativeRadius(radius_km));
        }
        let mut hits: Vec<(&Asset, f64)> = self
            .assets
            .values()
            .map(|a| (a, center.distance_km(&a.location())))
            .filter(|(_, d)| *d <= radius_km)
            .collect();
        // BTreeMap iteration is already asset_id ascending, so a stable sort
        // by distance leaves ties in id order.
        hits.sort_by(|a, b| a.1.total_cmp(&b.1));
        Ok(hits)
    }
}

/// Parses the asset file into per-line results without touching a registry.
pub fn parse_asset_file<R: Read>(
    input: R,
) -> Result<Vec<(u64, Result<Asset, RecordError>)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);

    let mut out = Vec::new();
    let mut header_seen = false;
    let mut record = csv::ByteRecord::new();
    loop {
        let more = match reader.read_byte_record(&mut record) {
            Ok(more) => more,
            Err(e) => return Err(csv_error(e)),
        };
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if !header_seen {
            let found: Vec<String> = record
                .iter()
                .map(|f| String::from_utf8_lossy(f).trim().to_owned())
                .collect();
            if found.iter().map(String::as_str).ne(ASSET_FILE_HEADER) {
                return Err(IngestError::Header {
                    expected: ASSET_FILE_HEADER.join(","),
                    found: found.join(","),
                });
            }
            header_seen = true;
            continue;
        }
        let parsed = match csv::StringRecord::from_byte_record(record.clone()) {
            Ok(rec) => parse_record(&rec),
            Err(_) => Err(RecordError::Encoding),
        };
        out.push((line, parsed));
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Csv(format!("{other:?}")),
    }
}

fn parse_record(rec: &csv::StringRecord) -> Result<Asset, RecordError> {
    if rec.len() != ASSET_FILE_HEADER.len() {
        return Err(RecordError::FieldCount {
            expected: ASSET_FILE_HEADER.len(),
            found: rec.len(),
        });
    }
    let asset = Asset {
        asset_id: AssetId::new(&rec[0]),
        title: rec[1].to_owned(),
        county: rec[2].to_owned(),
        latitude: parse_f64("latitude", &rec[3])?,
        longitude: parse_f64("longitude", &rec[4])?,
        book_value: Cents(parse_i64("book_value_cents", &rec[5])?),
        loan_reference: rec[6].to_owned(),
        status: AssetStatus::Registered,
    };
    asset.validate()?;
    Ok(asset)
}

fn parse_f64(field: &'static str, raw: &str) -> Result<f64, RecordError> {
    let v: f64 = raw.trim().parse().map_err(|_| RecordError::NotANumber {
        field,
        value: raw.to_owned(),
    })?;
    if !v.is_finite() {
        return Err(RecordError::NotANumber {
            field,
            value: raw.to_owned(),
        });
    }
    Ok(v)
}

fn parse_i64(field: &'static str, raw: &str) -> Result<i64, RecordError> {
    raw.trim().parse().map_err(|_| RecordError::NotANumber {
        field,
        value: raw.to_owned(),
    })
}
