//! In-process storage cluster.
//!
//! Every server owns its share and talks to the client only through encoded
//! [`WireMessage`] frames over its own channel pair. Servers of one round run
//! on scoped threads. Download accounting counts response payload symbols.

use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use num_rational::Ratio;
use pmpir_core::layered::{
    reconstruct, respond, LayeredScheme, MaskSource, QuerySet, ResponseBundle, Schedule,
    SeededMasks,
};
use pmpir_core::pir_mbr::{mbr_schedule, mbr_scheme, MbrPattern};
use pmpir_core::pir_msr::{msr_plan, msr_schedule, RetrievalPlan, Strategy};
use pmpir_core::pm_codes::{helper_symbols, repair_node, CodeParams, Family, NodeStore};
use pmpir_core::{Elem, Error};

use crate::error::{SimError, SimResult};
use crate::store::read_store;
use crate::transcript::Transcript;
use crate::wire::{params_hash, Kind, WireMessage};

/// The public download schedule of a family.
pub fn public_schedule(params: &CodeParams) -> Schedule {
    match params.geometry.family {
        Family::Mbr => mbr_schedule(&params.geometry),
        Family::Msr => msr_schedule(&params.geometry),
    }
}

#[derive(Clone, Debug)]
pub struct ServerInstance {
    id: usize,
    params: CodeParams,
    schedule: Schedule,
    hash: [u8; 8],
    share: Option<Vec<Elem>>,
    pub symbols_in: usize,
    pub symbols_out: usize,
}

impl ServerInstance {
    pub fn new(id: usize, params: CodeParams, share: Vec<Elem>) -> Self {
        ServerInstance {
            id,
            schedule: public_schedule(&params),
            hash: params_hash(&params),
            params,
            share: Some(share),
            symbols_in: 0,
            symbols_out: 0,
        }
    }

    /// Zero-based server index.
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn share(&self) -> Option<&[Elem]> {
        self.share.as_deref()
    }

    pub fn is_failed(&self) -> bool {
        self.share.is_none()
    }

    /// Serves one frame. The server sees nothing but its own share and the
    /// frame.
    pub fn handle(&mut self, frame: &[u8]) -> SimResult<Vec<u8>> {
        let msg = WireMessage::decode(frame)?;
        if msg.params_hash != self.hash {
            return Err(SimError::HeaderMismatch(format!(
                "server {} received a frame for other parameters",
                self.id + 1
            )));
        }
        let share = self
            .share
            .as_deref()
            .ok_or_else(|| SimError::Protocol(format!("server {} is down", self.id + 1)))?;
        let f = self.params.field;
        let symbols = msg
            .payload
            .iter()
            .map(|&v| {
                if v < f.modulus() {
                    Ok(f.elem(v))
                } else {
                    Err(SimError::MalformedFrame(format!("symbol {v} not reduced")))
                }
            })
            .collect::<SimResult<Vec<_>>>()?;
        self.symbols_in += symbols.len();
        let (kind, out) = match msg.kind {
            Kind::Query => {
                let g = self.params.geometry;
                let r = respond(self.id, share, &symbols, &self.schedule, &g, f)?;
                (Kind::Response, r)
            }
            Kind::RepairReq => {
                let [failed] = symbols[..] else {
                    return Err(SimError::Protocol("repair request carries one index".into()));
                };
                let failed = failed.value() as usize;
                if failed >= self.params.geometry.n || failed == self.id {
                    return Err(Error::BadSubset.into());
                }
                (Kind::RepairSym, helper_symbols(share, failed, &self.params))
            }
            other => {
                return Err(SimError::Protocol(format!("server cannot handle {other:?}")))
            }
        };
        self.symbols_out += out.len();
        let payload = out.iter().map(|e| e.value()).collect();
        Ok(WireMessage::new(kind, self.hash, payload).encode())
    }
}

#[derive(Clone, Debug)]
pub struct Cluster {
    params: CodeParams,
    files: usize,
    servers: Vec<ServerInstance>,
    hash: [u8; 8],
}

impl Cluster {
    pub fn new(params: CodeParams, store: NodeStore) -> SimResult<Self> {
        if store.files() == 0 {
            return Err(SimError::EmptyDatabase);
        }
        let files = store.files();
        let servers = store
            .into_shares()
            .into_iter()
            .enumerate()
            .map(|(i, share)| ServerInstance::new(i, params.clone(), share))
            .collect();
        Ok(Cluster {
            hash: params_hash(&params),
            params,
            files,
            servers,
        })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn servers(&self) -> &[ServerInstance] {
        &self.servers
    }

    pub fn server(&self, i: usize) -> &ServerInstance {
        &self.servers[i]
    }

    /// Wipes a server's share.
    pub fn fail(&mut self, i: usize) {
        self.servers[i].share = None;
    }

    pub fn reset_counters(&mut self) {
        for s in &mut self.servers {
            s.symbols_in = 0;
            s.symbols_out = 0;
        }
    }

    /// Delivers one frame per addressed server through its own channel pair
    /// and waits for all replies.
    fn exchange(&mut self, frames: Vec<Option<Vec<u8>>>) -> SimResult<Vec<Option<Vec<u8>>>> {
        std::thread::scope(|scope| {
            let mut pending = Vec::new();
            for (server, frame) in self.servers.iter_mut().zip(frames) {
                let Some(frame) = frame else {
                    pending.push(None);
                    continue;
                };
                let (to_server, inbox) = mpsc::channel::<Vec<u8>>();
                let (outbox, from_server) = mpsc::channel::<SimResult<Vec<u8>>>();
                scope.spawn(move || {
                    for f in inbox {
                        if outbox.send(server.handle(&f)).is_err() {
                            break;
                        }
                    }
                });
                to_server
                    .send(frame)
                    .map_err(|_| SimError::Protocol("server channel closed".into()))?;
                pending.push(Some(from_server));
            }
            pending
                .into_iter()
                .map(|rx| match rx {
                    None => Ok(None),
                    Some(rx) => rx
                        .recv()
                        .map_err(|_| SimError::Protocol("server hung up".into()))?
                        .map(Some),
                })
                .collect()
        })
    }

    fn reply_symbols(&self, frame: &[u8], kind: Kind) -> SimResult<Vec<Elem>> {
        let msg = WireMessage::decode(frame)?;
        if msg.kind != kind || msg.params_hash != self.hash {
            return Err(SimError::Protocol(format!("expected {kind:?} for these parameters")));
        }
        let f = self.params.field;
        msg.payload
            .iter()
            .map(|&v| {
                if v < f.modulus() {
                    Ok(f.elem(v))
                } else {
                    Err(SimError::MalformedFrame(format!("symbol {v} not reduced")))
                }
            })
            .collect()
    }
}

/// Loads a cluster from a store directory, optionally checking it against
/// the caller's parameters.
pub fn cluster_load(dir: &Path, expected: Option<&CodeParams>) -> SimResult<Cluster> {
    let (params, store) = read_store(dir)?;
    if let Some(e) = expected {
        if params_hash(e) != params_hash(&params) {
            return Err(SimError::HeaderMismatch(format!(
                "store holds {:?} ({}, {}, {}) over F_{}",
                params.geometry.family,
                params.geometry.n,
                params.geometry.k,
                params.geometry.d,
                params.field.modulus()
            )));
        }
    }
    Cluster::new(params, store)
}

/// Placement choices for building a scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SchemeChoice {
    pub mbr_pattern: MbrPattern,
    pub msr_strategy: Strategy,
}

pub fn build_scheme(
    params: &CodeParams,
    choice: SchemeChoice,
) -> SimResult<(LayeredScheme, Option<RetrievalPlan>)> {
    Ok(match params.geometry.family {
        Family::Mbr => (mbr_scheme(params, choice.mbr_pattern)?, None),
        Family::Msr => {
            let (plan, scheme) = msr_plan(params, choice.msr_strategy)?;
            (scheme, Some(plan))
        }
    })
}

/// One private retrieval of file `target` (zero-based) through the wire.
pub fn run_retrieval(
    cluster: &mut Cluster,
    scheme: &LayeredScheme,
    target: usize,
    seed: u64,
) -> SimResult<(Vec<Elem>, Transcript)> {
    let mut masks = SeededMasks::new(cluster.params.field, seed);
    run_retrieval_with(cluster, scheme, target, seed, &mut masks)
}

pub fn run_retrieval_with<M: MaskSource + ?Sized>(
    cluster: &mut Cluster,
    scheme: &LayeredScheme,
    target: usize,
    seed: u64,
    masks: &mut M,
) -> SimResult<(Vec<Elem>, Transcript)> {
    let start = Instant::now();
    if params_hash(scheme.params()) != cluster.hash {
        return Err(SimError::HeaderMismatch("scheme built for other parameters".into()));
    }
    let p = cluster.params.clone();
    let qs = QuerySet::generate(p.field, p.geometry.n, scheme.placement(), cluster.files, target, masks)?;
    let frames = query_frames(cluster, &qs);
    let replies = cluster.exchange(frames.into_iter().map(Some).collect())?;
    let mut bundle = ResponseBundle::new(scheme.schedule());
    let mut per_server = Vec::with_capacity(p.geometry.n);
    for (i, reply) in replies.into_iter().enumerate() {
        let symbols = cluster.reply_symbols(&reply.expect("every server queried"), Kind::Response)?;
        per_server.push(symbols.len());
        bundle.insert_server(i, &symbols)?;
    }
    let out = reconstruct(scheme, &bundle, &qs)?;
    let total: usize = per_server.iter().sum();
    let transcript = Transcript::new(
        &p,
        cluster.files,
        target,
        seed,
        per_server,
        out.file.len(),
        start.elapsed().as_secs_f64() * 1e3,
    );
    debug_assert_eq!(transcript.total_downloaded, total);
    Ok((out.file, transcript))
}

/// The encoded QUERY frame for every server.
pub fn query_frames(cluster: &Cluster, qs: &QuerySet) -> Vec<Vec<u8>> {
    (0..cluster.params.geometry.n)
        .map(|i| {
            let payload = qs.server_query(i).iter().map(|e| e.value()).collect();
            WireMessage::new(Kind::Query, cluster.hash, payload).encode()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairOutcome {
    pub restored: Vec<Elem>,
    /// Symbols received from each helper, in helper order.
    pub per_helper: Vec<usize>,
    pub downloaded: usize,
}

/// Rebuilds `failed` from the zero-based `helpers` and installs the result.
pub fn run_repair(cluster: &mut Cluster, failed: usize, helpers: &[usize]) -> SimResult<RepairOutcome> {
    let g = cluster.params.geometry;
    if failed >= g.n || helpers.iter().any(|&h| h >= g.n) {
        return Err(Error::BadSubset.into());
    }
    if helpers.contains(&failed) {
        return Err(Error::HelperOverlap(failed).into());
    }
    if helpers.len() < g.d {
        return Err(Error::NotEnoughHelpers {
            needed: g.d,
            got: helpers.len(),
        }
        .into());
    }
    let helpers = &helpers[..g.d];
    let mut frames = vec![None; g.n];
    for &h in helpers {
        frames[h] = Some(
            WireMessage::new(Kind::RepairReq, cluster.hash, vec![failed as u64]).encode(),
        );
    }
    let replies = cluster.exchange(frames)?;
    let mut received = Vec::with_capacity(g.d);
    for &h in helpers {
        let frame = replies[h].as_ref().expect("helper was asked");
        received.push((h, cluster.reply_symbols(frame, Kind::RepairSym)?));
    }
    let restored = repair_node(failed, &received, &cluster.params)?;
    let per_helper: Vec<usize> = received.iter().map(|(_, s)| s.len()).collect();
    let downloaded = per_helper.iter().sum();
    cluster.servers[failed].share = Some(restored.clone());
    Ok(RepairOutcome {
        restored,
        per_helper,
        downloaded,
    })
}

/// `numerator/denominator`, also for integers.
pub fn fraction(r: Ratio<i128>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// The smallest prime `q >= n + 1` for which parameters validate and, for
/// MSR, a certified plan exists.
pub fn smallest_admissible_prime(
    family: Family,
    n: usize,
    k: usize,
    d: usize,
    choice: SchemeChoice,
) -> SimResult<u64> {
    pmpir_core::pm_codes::Geometry::new(family, n, k, d)?;
    let mut q = pmpir_core::galois::next_prime(n as u64 + 1);
    loop {
        if q > pmpir_core::galois::MAX_MODULUS {
            return Err(Error::FieldTooSmall("no admissible prime up to 2^31 - 1".into()).into());
        }
        if let Ok(p) = pmpir_core::pm_codes::validate_params(family, n, k, d, q) {
            if build_scheme(&p, choice).is_ok() {
                return Ok(q);
            }
        }
        q = pmpir_core::galois::next_prime(q + 1);
    }
}
