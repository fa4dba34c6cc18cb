//! Text embeddings: the vector type, cosine similarity, providers and the
//! content-addressed on-disk cache.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::manifest::write_atomic;
use crate::provider::{sha256_hex, HttpJsonClient, ProviderError, RetryPolicy};
use crate::text::tokens;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub provider_id: String,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, provider_id: impl Into<String>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("embedding has non-finite values".into()));
        }
        Ok(Self {
            values,
            provider_id: provider_id.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            provider_id: self.provider_id.clone(),
        }
    }
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    cosine(&a.values, &b.values)
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub trait EmbedProvider: Send + Sync {
    fn id(&self) -> &str;
    fn embed(&self, text: &str) -> std::result::Result<Vec<f64>, ProviderError>;
}

/// Signed feature hashing of token counts. Each token goes to bucket
/// `sha256(token)[0..8] mod dim` with sign from bit 0 of byte 8.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    pub dim: usize,
    id: String,
}

impl MockEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            id: format!("mock-embed-{dim}"),
        }
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for tok in tokens(text) {
            let h = Sha256::digest(tok.as_bytes());
            let bucket = u64::from_le_bytes(h[..8].try_into().expect("8 bytes")) % self.dim as u64;
            let sign = if h[8] & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket as usize] += sign;
        }
        v
    }
}

impl Default for MockEmbedder {
    fn default() -> Self {
        Self::new(256)
    }
}

impl EmbedProvider for MockEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> std::result::Result<Vec<f64>, ProviderError> {
        Ok(self.vector(text))
    }
}

/// Posts `{model, input}` and reads `{embedding: [..]}`.
pub struct HttpEmbedder {
    client: HttpJsonClient,
    id: String,
}

impl HttpEmbedder {
    pub fn new(client: HttpJsonClient) -> Self {
        let id = format!("{}#{}", client.endpoint(), client.model());
        Self { client, id }
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    embedding: Vec<f64>,
}

impl EmbedProvider for HttpEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> std::result::Result<Vec<f64>, ProviderError> {
        let body = serde_json::json!({ "model": self.client.model(), "input": text });
        let resp: EmbeddingResponse = self.client.post_json(&body)?;
        if resp.embedding.is_empty() {
            return Err(ProviderError::Malformed("empty embedding".into()));
        }
        Ok(resp.embedding)
    }
}

/// Embeddings stored as `<dir>/<sha256(provider_id NUL text)>.json`.
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn in_workdir(workdir: &Path) -> Self {
        Self::new(workdir.join("cache").join("embeddings"))
    }

    pub fn key(provider_id: &str, text: &str) -> String {
        let mut bytes = provider_id.as_bytes().to_vec();
        bytes.push(0);
        bytes.extend_from_slice(text.as_bytes());
        sha256_hex(&bytes)
    }

    fn path(&self, provider_id: &str, text: &str) -> PathBuf {
        self.dir.join(format!("{}.json", Self::key(provider_id, text)))
    }

    pub fn get(&self, provider_id: &str, text: &str) -> Option<EmbeddingVector> {
        let raw = std::fs::read_to_string(self.path(provider_id, text)).ok()?;
        let v: EmbeddingVector = serde_json::from_str(&raw).ok()?;
        (v.provider_id == provider_id).then_some(v)
    }

    pub fn put(&self, text: &str, vector: &EmbeddingVector) -> Result<()> {
        let path = self.path(&vector.provider_id, text);
        if path.exists() {
            return Ok(());
        }
        let mut s = serde_json::to_string(vector)?;
        s.push('\n');
        write_atomic(&path, s.as_bytes())
    }
}

/// Embed `text`, consulting the cache first when one is given.
pub fn embed_text(
    text: &str,
    provider: &dyn EmbedProvider,
    cache: Option<&EmbeddingCache>,
    retry: RetryPolicy,
) -> Result<EmbeddingVector> {
    if let Some(hit) = cache.and_then(|c| c.get(provider.id(), text)) {
        return Ok(hit);
    }
    let (values, _) = retry.run(|_| provider.embed(text));
    let values = values.map_err(|e| Error::provider(provider.id(), e))?;
    let vector = EmbeddingVector::new(values, provider.id())?;
    if let Some(c) = cache {
        c.put(text, &vector)?;
    }
    Ok(vector)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec(), "t").unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&v(&[1.0, 2.0, 2.0]), &v(&[1.0, 2.0, 2.0])).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        let s = cosine_similarity(&v(&[1.0, 2.0, 2.0]), &v(&[2.0, 1.0, 2.0])).unwrap();
        assert!((s - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch(1, 2))
        ));
        assert_eq!(
            cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 2.0])).unwrap_err().to_string(),
            "degenerate embedding"
        );
        assert!(EmbeddingVector::new(vec![f64::NAN], "t").is_err());
    }

    #[test]
    fn mock_embedder_is_stable() {
        let m = MockEmbedder::default();
        assert_eq!(m.vector("The cat, the CAT!"), m.vector("the cat the cat"));
        let a = m.vector("cat");
        assert_eq!(a.iter().map(|x: &f64| x.abs()).sum::<f64>(), 1.0);
        assert!(m.vector("").iter().all(|x| *x == 0.0));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EmbeddingCache::in_workdir(dir.path());
        let m = MockEmbedder::default();
        let a = embed_text("hello there", &m, Some(&cache), RetryPolicy::none()).unwrap();
        assert_eq!(cache.get(m.id(), "hello there"), Some(a));
        assert_eq!(cache.get("other", "hello there"), None);
    }
}
