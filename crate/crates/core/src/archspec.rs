//! Architecture descriptions as strings over a layer alphabet.
//!
//! A network is reduced to the ordered list of its layer *kinds*; layer
//! hyper-parameters (filter counts, kernel sizes, activations folded into a
//! layer) are not part of the encoding. Each kind is assigned a
//! single-character code by a [`LayerAlphabet`], so an [`ArchSpec`] can be
//! handled as a plain symbol string by the alignment and pattern modules.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};
use thiserror::Error;

/// Alphabet covering the bundled architecture fixtures.
pub const DEFAULT_ALPHABET_JSON: &str = include_str!("../fixtures/alphabet.json");

#[derive(Error, Debug)]
pub enum ArchSpecError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("alphabet is empty")]
    EmptyAlphabet,

    #[error("layer name must be non-empty")]
    EmptyName,

    #[error("duplicate layer name {0:?} in alphabet")]
    DuplicateName(String),

    #[error("duplicate code {code:?}: used by both {first:?} and {second:?}")]
    DuplicateCode {
        code: char,
        first: String,
        second: String,
    },

    #[error("code for {name:?} must be exactly one character, got {code:?}")]
    InvalidCode { name: String, code: String },

    #[error("architecture {0:?} has no layers")]
    EmptyLayers(String),

    #[error("unknown layer {name:?} at position {index}")]
    UnknownLayer { name: String, index: usize },

    #[error("unknown layer code {code:?} at position {index}")]
    UnknownCode { code: char, index: usize },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<ArchSpecError>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ArchSpecError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerKind {
    pub code: char,
    pub name: String,
}

/// Bijective mapping between layer names and single-character codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAlphabet {
    entries: Vec<LayerKind>,
    by_name: HashMap<String, usize>,
    by_code: HashMap<char, usize>,
}

impl LayerAlphabet {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, char)>,
        S: Into<String>,
    {
        let mut alphabet = LayerAlphabet {
            entries: Vec::new(),
            by_name: HashMap::new(),
            by_code: HashMap::new(),
        };
        for (name, code) in entries {
            let name = name.into();
            if name.is_empty() {
                return Err(ArchSpecError::EmptyName);
            }
            if alphabet.by_name.contains_key(&name) {
                return Err(ArchSpecError::DuplicateName(name));
            }
            if let Some(&idx) = alphabet.by_code.get(&code) {
                return Err(ArchSpecError::DuplicateCode {
                    code,
                    first: alphabet.entries[idx].name.clone(),
                    second: name,
                });
            }
            let idx = alphabet.entries.len();
            alphabet.by_name.insert(name.clone(), idx);
            alphabet.by_code.insert(code, idx);
            alphabet.entries.push(LayerKind { code, name });
        }
        if alphabet.entries.is_empty() {
            return Err(ArchSpecError::EmptyAlphabet);
        }
        Ok(alphabet)
    }

    /// Parses an alphabet document: a JSON object mapping layer name to code.
    ///
    /// Entry order is preserved and repeated keys are reported rather than
    /// silently overwritten.
    pub fn parse(source: &str) -> Result<Self> {
        let raw: OrderedPairs = serde_json::from_str(strip_bom(source))?;
        let mut pairs = Vec::with_capacity(raw.0.len());
        for (name, code) in raw.0 {
            let mut chars = code.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => pairs.push((name, c)),
                _ => return Err(ArchSpecError::InvalidCode { name, code }),
            }
        }
        Self::from_entries(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        Self::parse(&text).map_err(|e| in_file(path, e))
    }

    /// The alphabet shipped with the architecture fixtures.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_ALPHABET_JSON).expect("bundled alphabet is valid")
    }

    pub fn entries(&self) -> &[LayerKind] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn code_of(&self, name: &str) -> Option<char> {
        self.by_name.get(name).map(|&i| self.entries[i].code)
    }

    pub fn name_of(&self, code: char) -> Option<&str> {
        self.by_code
            .get(&code)
            .map(|&i| self.entries[i].name.as_str())
    }

    /// Serializes back to the alphabet document format.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        for (i, kind) in self.entries.iter().enumerate() {
            let sep = if i + 1 == self.entries.len() { "" } else { "," };
            out.push_str(&format!(
                "  {}: {}{}\n",
                serde_json::to_string(&kind.name).unwrap(),
                serde_json::to_string(&kind.code.to_string()).unwrap(),
                sep
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// A named architecture encoded as a sequence of layer codes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArchSpec {
    name: String,
    layers: Vec<char>,
}

#[derive(Deserialize)]
struct RawSpec {
    name: String,
    layers: Vec<String>,
}

impl ArchSpec {
    /// Builds a spec from layer names, validating each against the alphabet.
    pub fn from_names<S: AsRef<str>>(
        name: impl Into<String>,
        layers: &[S],
        alphabet: &LayerAlphabet,
    ) -> Result<Self> {
        let name = name.into();
        if layers.is_empty() {
            return Err(ArchSpecError::EmptyLayers(name));
        }
        let codes = layers
            .iter()
            .enumerate()
            .map(|(index, layer)| {
                alphabet
                    .code_of(layer.as_ref())
                    .ok_or_else(|| ArchSpecError::UnknownLayer {
                        name: layer.as_ref().to_string(),
                        index,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ArchSpec {
            name,
            layers: codes,
        })
    }

    /// Parses a `{"name": ..., "layers": [...]}` document.
    pub fn parse(source: &str, alphabet: &LayerAlphabet) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(strip_bom(source))?;
        Self::from_names(raw.name, &raw.layers, alphabet)
    }

    pub fn load(path: &Path, alphabet: &LayerAlphabet) -> Result<Self> {
        let text = read_file(path)?;
        Self::parse(&text, alphabet).map_err(|e| in_file(path, e))
    }

    /// Inverse of [`ArchSpec::encode`].
    pub fn decode(
        name: impl Into<String>,
        symbols: &str,
        alphabet: &LayerAlphabet,
    ) -> Result<Self> {
        let name = name.into();
        let mut layers = Vec::new();
        for (index, code) in symbols.chars().enumerate() {
            if alphabet.name_of(code).is_none() {
                return Err(ArchSpecError::UnknownCode { code, index });
            }
            layers.push(code);
        }
        if layers.is_empty() {
            return Err(ArchSpecError::EmptyLayers(name));
        }
        Ok(ArchSpec { name, layers })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[char] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn encode(&self) -> String {
        self.layers.iter().collect()
    }

    pub fn layer_names<'a>(&self, alphabet: &'a LayerAlphabet) -> Vec<&'a str> {
        self.layers
            .iter()
            .map(|&c| {
                alphabet
                    .name_of(c)
                    .expect("spec validated against alphabet")
            })
            .collect()
    }

    /// Renders the spec as a document accepted by [`ArchSpec::parse`].
    pub fn to_json(&self, alphabet: &LayerAlphabet) -> String {
        serde_json::json!({ "name": self.name, "layers": self.layer_names(alphabet) }).to_string()
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} layers)", self.name, self.layers.len())
    }
}

/// Loads every `*.json` file in `dir`, sorted by file name.
pub fn load_spec_dir(dir: &Path, alphabet: &LayerAlphabet) -> Result<Vec<ArchSpec>> {
    let entries = fs::read_dir(dir).map_err(|source| ArchSpecError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ArchSpecError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.extension().is_some_and(|ext| ext == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(|p| ArchSpec::load(p, alphabet)).collect()
}

fn strip_bom(s: &str) -> &str {
    s.strip_prefix('\u{feff}').unwrap_or(s)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| ArchSpecError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file(path: &Path, e: ArchSpecError) -> ArchSpecError {
    ArchSpecError::InFile {
        path: path.to_path_buf(),
        source: Box::new(e),
    }
}

/// JSON object read as an ordered list of pairs, keeping repeated keys.
struct OrderedPairs(Vec<(String, String)>);

impl<'de> Deserialize<'de> for OrderedPairs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct PairsVisitor;

        impl<'de> Visitor<'de> for PairsVisitor {
            type Value = OrderedPairs;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping layer names to single-character codes")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut pairs = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    pairs.push((k, v));
                }
                Ok(OrderedPairs(pairs))
            }
        }

        deserializer.deserialize_map(PairsVisitor)
    }
}
