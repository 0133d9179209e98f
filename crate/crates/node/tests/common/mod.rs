#![allow(dead_code)]

use pmpir::sim::Cluster;
use pmpir_core::galois::{Elem, Field};
use pmpir_core::pm_codes::{encode_database, validate_params, CodeParams, Family};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn random_symbols(field: Field, len: usize, seed: u64) -> Vec<Elem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| field.random(&mut rng)).collect()
}

pub fn params(family: Family, n: usize, k: usize, d: usize, q: u64) -> CodeParams {
    validate_params(family, n, k, d, q).unwrap()
}

/// A cluster holding `files` random files, returned with the plain files.
pub fn cluster(params: &CodeParams, files: usize, seed: u64) -> (Cluster, Vec<Vec<Elem>>) {
    let per = params.geometry.file_symbols();
    let flat = random_symbols(params.field, per * files, seed);
    let store = encode_database(&flat, params).unwrap();
    let plain = flat.chunks(per).map(<[Elem]>::to_vec).collect();
    (Cluster::new(params.clone(), store).unwrap(), plain)
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}
