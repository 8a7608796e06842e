//! Documents, their vectors and metadata, and the two on-disk corpus formats.
//!
//! * JSONL: an optional `{"dimension": d}` header line followed by one
//!   `{"id", "vector", "metadata"}` object per line.
//! * Packed binary: a `TVEC` header and row-major little-endian `f32` values,
//!   with a JSONL sidecar carrying ids and metadata in row order.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PACKED_MAGIC: &[u8; 4] = b"TVEC";
pub const PACKED_VERSION: u32 = 1;
/// Size of the packed header: magic, version, n, d.
pub const PACKED_HEADER_LEN: u64 = 4 + 4 + 8 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            values,
        }
    }
}

/// Textual and numeric attributes attached to a document, used by filters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub string_fields: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub numeric_fields: BTreeMap<String, f64>,
}

impl Metadata {
    pub fn is_empty(&self) -> bool {
        self.string_fields.is_empty() && self.numeric_fields.is_empty()
    }

    pub fn with_string(mut self, field: impl Into<String>, value: impl Into<String>) -> Self {
        self.string_fields.insert(field.into(), value.into());
        self
    }

    pub fn with_number(mut self, field: impl Into<String>, value: f64) -> Self {
        self.numeric_fields.insert(field.into(), value);
        self
    }

    fn validate(&self, id: &str) -> Result<()> {
        for name in self.string_fields.keys().chain(self.numeric_fields.keys()) {
            if name.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "document `{id}` has an empty metadata field name"
                )));
            }
        }
        if let Some(name) = self
            .string_fields
            .keys()
            .find(|name| self.numeric_fields.contains_key(*name))
        {
            return Err(Error::InvalidParameter(format!(
                "document `{id}` uses field `{name}` as both string and numeric"
            )));
        }
        if let Some((name, _)) = self.numeric_fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "document `{id}` has non-finite numeric field `{name}`"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub vector: FeatureVector,
    pub metadata: Metadata,
}

impl Document {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            vector: FeatureVector::new(id, values),
            metadata: Metadata::default(),
        }
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn id(&self) -> &str {
        &self.vector.id
    }
}

/// An ordered collection of documents sharing one dimension. Ids are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    dimension: usize,
    documents: Vec<Document>,
    ordinals: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("corpus dimension must be positive".into()));
        }
        Ok(Self {
            dimension,
            documents: Vec::new(),
            ordinals: HashMap::new(),
        })
    }

    pub fn from_documents(dimension: usize, documents: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut corpus = Self::new(dimension)?;
        for doc in documents {
            corpus.push(doc)?;
        }
        Ok(corpus)
    }

    /// Appends a document after checking every corpus invariant.
    pub fn push(&mut self, doc: Document) -> Result<()> {
        let id = doc.id();
        if doc.vector.values.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                id: id.to_string(),
                expected: self.dimension,
                actual: doc.vector.values.len(),
            });
        }
        if let Some(position) = doc.vector.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                id: id.to_string(),
                position,
            });
        }
        doc.metadata.validate(id)?;
        if self.ordinals.contains_key(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        self.ordinals.insert(id.to_string(), self.documents.len());
        self.documents.push(doc);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn get(&self, ordinal: usize) -> Option<&Document> {
        self.documents.get(ordinal)
    }

    pub fn ordinal_of(&self, id: &str) -> Option<usize> {
        self.ordinals.get(id).copied()
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.documents.iter().map(|d| d.vector.values.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    PackedBinary,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Self::Jsonl),
            "packed" | "packed-binary" | "tvec" => Ok(Self::PackedBinary),
            other => Err(Error::InvalidParameter(format!("unknown corpus format `{other}`"))),
        }
    }
}

/// Path of the id/metadata sidecar that accompanies a packed vectors file.
pub fn sidecar_path(vectors: &Path) -> PathBuf {
    vectors.with_extension("meta.jsonl")
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    match format {
        CorpusFormat::Jsonl => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            read_jsonl(BufReader::new(file), &path.display().to_string())
        }
        CorpusFormat::PackedBinary => load_packed(path, &sidecar_path(path)),
    }
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>, format: CorpusFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        CorpusFormat::Jsonl => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut out = BufWriter::new(file);
            write_jsonl(corpus, &mut out).map_err(|e| Error::io(path, e))?;
            out.flush().map_err(|e| Error::io(path, e))
        }
        CorpusFormat::PackedBinary => save_packed(corpus, path, &sidecar_path(path)),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dimension: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    id: String,
    vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Metadata::is_empty")]
    metadata: Metadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SidecarRecord {
    pub(crate) id: String,
    #[serde(default, skip_serializing_if = "Metadata::is_empty")]
    pub(crate) metadata: Metadata,
}

/// Parses JSONL records. Without a header line the dimension is taken from
/// the first record; an empty input without a header is rejected.
pub fn read_jsonl<R: BufRead>(reader: R, source: &str) -> Result<Corpus> {
    let mut corpus: Option<Corpus> = None;
    let mut seen_record = false;
    for (lineno, line) in reader.lines().enumerate() {
        let location = || format!("{source}:{}", lineno + 1);
        let line = line.map_err(|e| Error::Malformed {
            location: location(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if !seen_record && corpus.is_none() {
            if let Ok(header) = serde_json::from_str::<Header>(&line) {
                corpus = Some(Corpus::new(header.dimension).map_err(|e| Error::Malformed {
                    location: location(),
                    message: e.to_string(),
                })?);
                continue;
            }
        }
        let record: JsonRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            location: location(),
            message: e.to_string(),
        })?;
        seen_record = true;
        let corpus = match corpus.as_mut() {
            Some(c) => c,
            None => corpus.insert(Corpus::new(record.vector.len()).map_err(|_| Error::Malformed {
                location: location(),
                message: format!("record `{}` has an empty vector", record.id),
            })?),
        };
        corpus.push(Document {
            vector: FeatureVector::new(record.id, record.vector),
            metadata: record.metadata,
        })?;
    }
    corpus.ok_or_else(|| Error::Malformed {
        location: source.to_string(),
        message: "empty corpus without a dimension header".into(),
    })
}

/// Writes the header line followed by one record per document.
pub fn write_jsonl<W: Write>(corpus: &Corpus, out: &mut W) -> std::io::Result<()> {
    serde_json::to_writer(
        &mut *out,
        &Header {
            dimension: corpus.dimension,
        },
    )?;
    out.write_all(b"\n")?;
    for doc in &corpus.documents {
        let record = JsonRecord {
            id: doc.vector.id.clone(),
            vector: doc.vector.values.clone(),
            metadata: doc.metadata.clone(),
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackedHeader {
    pub rows: u64,
    pub dimension: u32,
}

impl PackedHeader {
    pub fn body_len(&self) -> u64 {
        self.rows * self.dimension as u64 * 4
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(PACKED_MAGIC)?;
        out.write_all(&PACKED_VERSION.to_le_bytes())?;
        out.write_all(&self.rows.to_le_bytes())?;
        out.write_all(&self.dimension.to_le_bytes())
    }

    pub fn read<R: Read>(input: &mut R) -> Result<Self> {
        let mut buf = [0u8; PACKED_HEADER_LEN as usize];
        input
            .read_exact(&mut buf)
            .map_err(|e| Error::corrupted("packed header", e))?;
        if &buf[..4] != PACKED_MAGIC {
            return Err(Error::corrupted("packed header", "bad magic bytes"));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != PACKED_VERSION {
            return Err(Error::VersionMismatch {
                what: "packed vectors",
                found: version as u64,
                expected: PACKED_VERSION as u64,
            });
        }
        let header = Self {
            rows: u64::from_le_bytes(buf[8..16].try_into().unwrap()),
            dimension: u32::from_le_bytes(buf[16..20].try_into().unwrap()),
        };
        if header.dimension == 0 {
            return Err(Error::corrupted("packed header", "dimension is zero"));
        }
        Ok(header)
    }
}

/// Writes vectors as `f32`. Values that are not representable in `f32` lose
/// precision; values outside the `f32` range are rejected.
pub fn write_packed_vectors<'a, W: Write>(
    out: &mut W,
    dimension: usize,
    rows: impl ExactSizeIterator<Item = (&'a str, &'a [f64])>,
) -> Result<()> {
    let header = PackedHeader {
        rows: rows.len() as u64,
        dimension: u32::try_from(dimension)
            .map_err(|_| Error::InvalidParameter("dimension exceeds u32".into()))?,
    };
    let io = |e| Error::io("<packed vectors>", e);
    header.write(out).map_err(io)?;
    for (id, values) in rows {
        for (position, &v) in values.iter().enumerate() {
            let narrowed = v as f32;
            if !narrowed.is_finite() {
                return Err(Error::NonFinite {
                    id: id.to_string(),
                    position,
                });
            }
            out.write_all(&narrowed.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

pub(crate) fn write_sidecar<'a, W: Write>(
    out: &mut W,
    rows: impl Iterator<Item = (&'a str, &'a Metadata)>,
) -> std::io::Result<()> {
    for (id, metadata) in rows {
        let record = SidecarRecord {
            id: id.to_string(),
            metadata: metadata.clone(),
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub(crate) fn read_sidecar(path: &Path) -> Result<Vec<SidecarRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let location = || format!("{}:{}", path.display(), lineno + 1);
        let line = line.map_err(|e| Error::Malformed {
            location: location(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Malformed {
            location: location(),
            message: e.to_string(),
        })?);
    }
    Ok(records)
}

pub fn save_packed(corpus: &Corpus, vectors: &Path, sidecar: &Path) -> Result<()> {
    let file = File::create(vectors).map_err(|e| Error::io(vectors, e))?;
    let mut out = BufWriter::new(file);
    write_packed_vectors(
        &mut out,
        corpus.dimension,
        corpus
            .documents
            .iter()
            .map(|d| (d.vector.id.as_str(), d.vector.values.as_slice())),
    )?;
    out.flush().map_err(|e| Error::io(vectors, e))?;

    let file = File::create(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let mut out = BufWriter::new(file);
    write_sidecar(
        &mut out,
        corpus.documents.iter().map(|d| (d.vector.id.as_str(), &d.metadata)),
    )
    .and_then(|_| out.flush())
    .map_err(|e| Error::io(sidecar, e))
}

pub fn load_packed(vectors: &Path, sidecar: &Path) -> Result<Corpus> {
    let file = File::open(vectors).map_err(|e| Error::io(vectors, e))?;
    let file_len = file.metadata().map_err(|e| Error::io(vectors, e))?.len();
    let mut input = BufReader::new(file);
    let header = PackedHeader::read(&mut input)?;
    if file_len != PACKED_HEADER_LEN + header.body_len() {
        return Err(Error::corrupted(
            vectors.display().to_string(),
            format!(
                "expected {} bytes for {} rows of dimension {}, found {file_len}",
                PACKED_HEADER_LEN + header.body_len(),
                header.rows,
                header.dimension
            ),
        ));
    }
    let records = read_sidecar(sidecar)?;
    if records.len() as u64 != header.rows {
        return Err(Error::corrupted(
            sidecar.display().to_string(),
            format!("{} sidecar records for {} vector rows", records.len(), header.rows),
        ));
    }

    let dimension = header.dimension as usize;
    let mut corpus = Corpus::new(dimension)?;
    let mut row = vec![0u8; dimension * 4];
    for (ordinal, record) in records.into_iter().enumerate() {
        input.read_exact(&mut row).map_err(|e| {
            Error::corrupted(
                vectors.display().to_string(),
                format!("row {ordinal} at offset {}: {e}", PACKED_HEADER_LEN + (ordinal * dimension * 4) as u64),
            )
        })?;
        let values = row
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        corpus.push(Document {
            vector: FeatureVector::new(record.id, values),
            metadata: record.metadata,
        })?;
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus> {
        read_jsonl(text.as_bytes(), "test")
    }

    #[test]
    fn parses_two_records() {
        let corpus = parse(
            r#"{"id":"a","vector":[1,2,3]}
{"id":"b","vector":[4,5,6],"metadata":{"string_fields":{"color":"blue"},"numeric_fields":{"price":9.5}}}
"#,
        )
        .unwrap();
        assert_eq!(corpus.dimension(), 3);
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.get(1).unwrap().metadata.string_fields["color"], "blue");
        assert_eq!(corpus.ordinal_of("b"), Some(1));
    }

    #[test]
    fn empty_input_needs_header() {
        assert!(matches!(parse(""), Err(Error::Malformed { .. })));
        let corpus = parse("{\"dimension\":7}\n").unwrap();
        assert_eq!((corpus.dimension(), corpus.len()), (7, 0));
    }

    #[test]
    fn dimension_mismatch_names_record() {
        let err = parse("{\"id\":\"a\",\"vector\":[1,2,3]}\n{\"id\":\"b\",\"vector\":[1,2,3,4]}\n").unwrap_err();
        match err {
            Error::DimensionMismatch { id, expected, actual } => {
                assert_eq!((id.as_str(), expected, actual), ("b", 3, 4))
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_dimension_is_enforced() {
        let err = parse("{\"dimension\":2}\n{\"id\":\"a\",\"vector\":[1,2,3]}\n").unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = parse("{\"id\":\"a\",\"vector\":[1]}\n{\"id\":\"a\",\"vector\":[2]}\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn malformed_line_reports_location() {
        let err = parse("{\"id\":\"a\",\"vector\":[1]}\n{\"id\":\"b\",\"vector\":[oops]}\n").unwrap_err();
        assert!(err.to_string().starts_with("test:2"), "{err}");
        let err = parse("{\"id\":\"a\",\"vector\":[1],\"extra\":true}\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { .. }));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut corpus = Corpus::new(2).unwrap();
        let err = corpus.push(Document::new("x", vec![0.0, f64::NAN])).unwrap_err();
        assert!(matches!(err, Error::NonFinite { position: 1, .. }));
        assert!(corpus.is_empty());
    }

    #[test]
    fn conflicting_metadata_field_is_rejected() {
        let mut corpus = Corpus::new(1).unwrap();
        let meta = Metadata::default().with_string("f", "x").with_number("f", 1.0);
        assert!(corpus.push(Document::new("a", vec![0.0]).with_metadata(meta)).is_err());
    }

    #[test]
    fn packed_header_rejects_bad_magic_and_version() {
        let mut bytes = Vec::new();
        PackedHeader { rows: 0, dimension: 3 }.write(&mut bytes).unwrap();
        assert!(PackedHeader::read(&mut bytes.as_slice()).is_ok());
        let mut wrong_version = bytes.clone();
        wrong_version[4] = 9;
        assert!(matches!(
            PackedHeader::read(&mut wrong_version.as_slice()),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
        bytes[0] = b'X';
        assert!(PackedHeader::read(&mut bytes.as_slice()).is_err());
    }
}
