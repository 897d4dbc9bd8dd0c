use std::env;

use serde::{Deserialize, Serialize};

/// Optimization switches. All `false` is the eager baseline: every operation
/// is sent as soon as it is issued and every release deletes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub lazy: bool,
    pub dead_elim: bool,
    pub store_reuse: bool,
    pub array_cache: bool,
    pub cse: bool,
    pub reduce_memo: bool,
    /// Maximum number of unexecuted commands held in the buffer.
    pub buffer_cap: usize,
    /// Idle arrays kept per (size, dtype) bucket.
    pub freelist_bucket_cap: usize,
    /// Total elements held by idle arrays across all buckets.
    pub freelist_idle_elements: usize,
}

pub const DEFAULT_BUFFER_CAP: usize = 1024;
pub const DEFAULT_BUCKET_CAP: usize = 64;
pub const DEFAULT_IDLE_ELEMENTS: usize = 1 << 24;

/// Flag names in bit order for [`ClientConfig::from_bits`].
pub const FLAG_NAMES: [&str; 6] = ["lazy", "dead_elim", "store_reuse", "array_cache", "cse", "reduce_memo"];

impl ClientConfig {
    pub fn baseline() -> ClientConfig {
        ClientConfig::from_bits(0)
    }

    pub fn optimized() -> ClientConfig {
        ClientConfig::from_bits(0b11_1111)
    }

    /// Bit `i` enables the flag named `FLAG_NAMES[i]`.
    pub fn from_bits(bits: u8) -> ClientConfig {
        let on = |i: u8| bits & (1 << i) != 0;
        ClientConfig {
            lazy: on(0),
            dead_elim: on(1),
            store_reuse: on(2),
            array_cache: on(3),
            cse: on(4),
            reduce_memo: on(5),
            buffer_cap: DEFAULT_BUFFER_CAP,
            freelist_bucket_cap: DEFAULT_BUCKET_CAP,
            freelist_idle_elements: DEFAULT_IDLE_ELEMENTS,
        }
    }

    pub fn bits(&self) -> u8 {
        [self.lazy, self.dead_elim, self.store_reuse, self.array_cache, self.cse, self.reduce_memo]
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &f)| acc | (u8::from(f) << i))
    }

    pub fn is_baseline(&self) -> bool {
        self.bits() == 0
    }

    fn flag_mut(&mut self, name: &str) -> Option<&mut bool> {
        Some(match name {
            "lazy" => &mut self.lazy,
            "dead_elim" => &mut self.dead_elim,
            "store_reuse" => &mut self.store_reuse,
            "array_cache" => &mut self.array_cache,
            "cse" => &mut self.cse,
            "reduce_memo" => &mut self.reduce_memo,
            _ => return None,
        })
    }

    pub fn set_flag(&mut self, name: &str, value: bool) -> bool {
        match self.flag_mut(name) {
            Some(f) => {
                *f = value;
                true
            }
            None => false,
        }
    }

    /// Applies `LAZYARR_<FLAG>=0|1` and `LAZYARR_BUFFER_CAP=<n>` overrides.
    pub fn with_env(mut self) -> ClientConfig {
        for name in FLAG_NAMES {
            let var = format!("LAZYARR_{}", name.to_uppercase());
            match env::var(&var).as_deref() {
                Ok("1") => {
                    self.set_flag(name, true);
                }
                Ok("0") => {
                    self.set_flag(name, false);
                }
                Ok(other) => log::warn!("ignoring {var}={other}; expected 0 or 1"),
                Err(_) => {}
            }
        }
        if let Some(cap) = env::var("LAZYARR_BUFFER_CAP").ok().and_then(|v| v.parse().ok()) {
            self.buffer_cap = cap;
        }
        self
    }

    /// Short label such as `opt`, `base` or `lazy+cse`.
    pub fn label(&self) -> String {
        match self.bits() {
            0 => "base".into(),
            0b11_1111 => "opt".into(),
            bits => FLAG_NAMES
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, n)| *n)
                .collect::<Vec<_>>()
                .join("+"),
        }
    }
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig::optimized()
    }
}
