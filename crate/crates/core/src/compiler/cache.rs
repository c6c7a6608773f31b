use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, PoisonError, RwLock};

use super::{compile, source_hash, CompileError, CompileOptions, CompiledKernel, Program};
use crate::physl::Ast;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

/// Compiled programs keyed by source hash. Lookups take a shared lock;
/// insertion is exclusive and the first inserted program wins, so
/// concurrent compiles of one source all observe the same kernels.
#[derive(Default)]
pub struct KernelCache {
    programs: RwLock<HashMap<u64, Arc<Program>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn compile(&self, ast: &Ast, options: &CompileOptions) -> Result<Arc<Program>, CompileError> {
        let key = source_hash(ast, options);
        if let Some(p) = self.programs.read().unwrap_or_else(PoisonError::into_inner).get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(p.clone());
        }
        let compiled = Arc::new(compile(ast, options)?);
        let mut map = self.programs.write().unwrap_or_else(PoisonError::into_inner);
        let entry = map.entry(key);
        if matches!(entry, std::collections::hash_map::Entry::Occupied(_)) {
            self.hits.fetch_add(1, Ordering::Relaxed);
        } else {
            self.misses.fetch_add(1, Ordering::Relaxed);
        }
        Ok(entry.or_insert(compiled).clone())
    }

    /// Cached kernel by name and program source hash.
    pub fn kernel(&self, name: &str, hash: u64) -> Option<Arc<CompiledKernel>> {
        let map = self.programs.read().unwrap_or_else(PoisonError::into_inner);
        map.get(&hash)?.kernel(name).cloned()
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            entries: self.programs.read().unwrap_or_else(PoisonError::into_inner).len(),
        }
    }
}
