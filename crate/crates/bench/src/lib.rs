//! Shared fixtures for the criterion benches.

use probtag::corpus::generate_synthetic;
use probtag::{Dataset, TaxonomyMap};

/// A synthetic corpus with the default taxonomy.
pub fn corpus(n: usize, seed: u64) -> (Dataset, TaxonomyMap) {
    let t = TaxonomyMap::default_map();
    (generate_synthetic(n, &t, seed), t)
}

/// A raw statement with markup, math and digits for the cleaning bench.
pub const RAW_STATEMENT: &str = "<p>Given an array of <b>n</b> integers ($1 \\le n \\le 10^5$), \
find the length of the longest strictly increasing subsequence. The answer may be large, \
so print it modulo 1000000007.</p><p>Each test contains several queries; for every query \
output a single number on its own line.</p>";
