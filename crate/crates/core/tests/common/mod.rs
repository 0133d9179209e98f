#![allow(dead_code)]

use pmpir_core::galois::{Elem, Field};
use pmpir_core::pm_codes::{encode_database, pack_message, CodeParams, MessageArray, NodeStore};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn random_symbols(field: Field, len: usize, seed: u64) -> Vec<Elem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| field.random(&mut rng)).collect()
}

pub struct Db {
    pub files: Vec<Vec<Elem>>,
    pub messages: Vec<MessageArray>,
    pub store: NodeStore,
}

pub fn random_db(params: &CodeParams, files: usize, seed: u64) -> Db {
    let per = params.geometry.file_symbols();
    let flat = random_symbols(params.field, per * files, seed);
    let files: Vec<Vec<Elem>> = flat.chunks(per).map(<[Elem]>::to_vec).collect();
    let messages = files.iter().map(|f| pack_message(f, params).unwrap()).collect();
    let store = encode_database(&flat, params).unwrap();
    Db { files, messages, store }
}

/// `C[i, j, s] = sum_r x_i^r M[r, j, s]` evaluated term by term.
pub fn oracle_symbol(params: &CodeParams, msg: &MessageArray, i: usize, j: usize, s: usize) -> Elem {
    let f = params.field;
    let x = params.points().get(i);
    let m = msg.stripe(s);
    (0..m.rows()).fold(Elem::ZERO, |acc, r| {
        f.add(acc, f.mul(f.pow(x, r as u64), m.get(r, j)))
    })
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
