//! Seeded random instances at desk scale.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use spki_core::cert::Crl;
use spki_core::engine::crl_set_consistent;
use spki_core::{Action, ActionExpr, Atom, AuthCert, Certificate, End, FqName, Key, LocalName, NamingCert, Validity};

pub use rand::SeedableRng;
pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub keys: Vec<Key>,
    pub names: Vec<LocalName>,
    pub actions: Vec<Action>,
    pub certs: Vec<Certificate>,
    pub crls: Vec<Certificate>,
}

impl Instance {
    pub fn all(&self) -> Vec<Certificate> {
        self.certs.iter().chain(&self.crls).cloned().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_keys: usize,
    pub max_names: usize,
    pub max_actions: usize,
    pub max_certs: usize,
    pub max_crls: usize,
    pub max_time: u64,
    pub prefix_tags: bool,
}

/// |K| ≤ 4, |N| ≤ 3, |C| ≤ 6, |C_R| ≤ 2, endpoints ≤ 8, literal actions ≤ 3.
pub const DESK: Shape = Shape {
    max_keys: 4,
    max_names: 3,
    max_actions: 3,
    max_certs: 6,
    max_crls: 2,
    max_time: 8,
    prefix_tags: false,
};

const KEY_NAMES: [&str; 6] = ["k-a", "k-b", "k-c", "k-d", "k-e", "k-f"];
const LOCAL_NAMES: [&str; 4] = ["n", "m", "p", "q"];
const ACTIONS: [&str; 4] = ["read", "write", "exec", "list"];

pub struct Gen<'a> {
    pub rng: &'a mut Rng8,
    pub shape: Shape,
    pub keys: Vec<Key>,
    pub names: Vec<LocalName>,
    pub actions: Vec<Action>,
}

impl<'a> Gen<'a> {
    pub fn new(rng: &'a mut Rng8, shape: Shape) -> Self {
        let nk = rng.gen_range(1..=shape.max_keys);
        let nn = rng.gen_range(1..=shape.max_names);
        let na = rng.gen_range(1..=shape.max_actions);
        Gen {
            keys: KEY_NAMES[..nk].iter().map(|k| Key::new(*k).unwrap()).collect(),
            names: LOCAL_NAMES[..nn].iter().map(|n| LocalName::new(*n).unwrap()).collect(),
            actions: ACTIONS[..na].iter().map(|a| Action::new([*a]).unwrap()).collect(),
            rng,
            shape,
        }
    }

    pub fn key(&mut self) -> Key {
        self.keys.choose(self.rng).unwrap().clone()
    }

    pub fn name(&mut self) -> LocalName {
        self.names.choose(self.rng).unwrap().clone()
    }

    pub fn interval(&mut self) -> Validity {
        let lo = self.rng.gen_range(0..=self.shape.max_time);
        if self.rng.gen_bool(0.15) {
            Validity::new(lo, End::Infinity)
        } else {
            Validity::finite(lo, self.rng.gen_range(lo..=self.shape.max_time))
        }
    }

    pub fn subject(&mut self) -> FqName {
        let len = match self.rng.gen_range(0..20) {
            0..=9 => 0,
            10..=16 => 1,
            _ => 2,
        };
        let root = self.key();
        let names = (0..len).map(|_| self.name()).collect();
        FqName::new(root, names)
    }

    pub fn tag(&mut self) -> ActionExpr {
        let mut atoms = Vec::new();
        for a in self.actions.clone() {
            if self.rng.gen_bool(0.5) {
                atoms.push(Atom::Literal(a));
            }
        }
        if self.shape.prefix_tags && self.rng.gen_bool(0.3) {
            let a = self.actions.choose(self.rng).unwrap().path()[0].clone();
            let cut = self.rng.gen_range(1..=a.len());
            atoms.push(Atom::prefix([a[..cut].to_string()]).unwrap());
        }
        if atoms.is_empty() {
            atoms.push(Atom::Literal(self.actions.choose(self.rng).unwrap().clone()));
        }
        ActionExpr::new(atoms)
    }

    pub fn revoker(&mut self) -> Option<Key> {
        self.rng.gen_bool(0.3).then(|| self.key())
    }

    pub fn cert(&mut self) -> Certificate {
        if self.rng.gen_bool(0.55) {
            Certificate::Naming(NamingCert {
                issuer: self.key(),
                name: self.name(),
                subject: self.subject(),
                validity: self.interval(),
                revoker: self.revoker(),
            })
        } else {
            Certificate::Auth(AuthCert {
                issuer: self.key(),
                subject: self.subject(),
                delegate: self.rng.gen_bool(0.5),
                action: self.tag(),
                validity: self.interval(),
                revoker: self.revoker(),
            })
        }
    }

    /// A CRL by some revoker of `certs`, canceling a random subset of the
    /// certificates it may revoke.
    pub fn crl(&mut self, certs: &[Certificate]) -> Certificate {
        let revokers: Vec<Key> = certs.iter().filter_map(|c| c.revoker().cloned()).collect();
        let issuer = match revokers.choose(self.rng) {
            Some(k) if self.rng.gen_bool(0.8) => k.clone(),
            _ => self.key(),
        };
        let canceled: Vec<Certificate> = certs
            .iter()
            .filter(|c| c.revoker() == Some(&issuer) && self.rng.gen_bool(0.4))
            .cloned()
            .collect();
        let v = self.interval();
        Certificate::Crl(Crl::new(issuer, canceled, v).unwrap())
    }

    pub fn instance(&mut self) -> Instance {
        let n = self.rng.gen_range(0..=self.shape.max_certs);
        let certs: Vec<Certificate> = (0..n).map(|_| self.cert()).collect();
        let mut crls: Vec<Certificate> = Vec::new();
        for _ in 0..self.rng.gen_range(0..=self.shape.max_crls) {
            let crl = self.crl(&certs);
            let mut next = crls.clone();
            next.push(crl);
            if crl_set_consistent(&next) {
                crls = next;
            }
        }
        Instance { keys: self.keys.clone(), names: self.names.clone(), actions: self.actions.clone(), certs, crls }
    }
}

pub fn instance(rng: &mut Rng8, shape: Shape) -> Instance {
    Gen::new(rng, shape).instance()
}

/// A random sub-instance: each certificate and CRL kept with probability ½.
pub fn sub_instance(rng: &mut Rng8, inst: &Instance) -> Instance {
    let mut keep = |cs: &[Certificate]| cs.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect::<Vec<_>>();
    Instance { certs: keep(&inst.certs), crls: keep(&inst.crls), ..inst.clone() }
}

/// The instance's certificates and CRLs issued at random times.
pub fn random_run_events(rng: &mut Rng8, inst: &Instance, max_time: u64) -> BTreeMap<u64, BTreeSet<Certificate>> {
    let mut events: BTreeMap<u64, BTreeSet<Certificate>> = BTreeMap::new();
    for c in inst.all() {
        events.entry(rng.gen_range(0..=max_time)).or_default().insert(c);
    }
    events
}

/// The irrevocable certificate whose tuple is `t` (4- and 5-tuples only).
pub fn cert_of_tuple(t: &spki_core::Tuple) -> Option<Certificate> {
    match t {
        spki_core::Tuple::Name4(n) => Some(Certificate::Naming(NamingCert {
            issuer: n.issuer.clone(),
            name: n.name.clone(),
            subject: n.subject.clone(),
            validity: n.validity,
            revoker: None,
        })),
        spki_core::Tuple::Auth5(a) => Some(Certificate::Auth(AuthCert {
            issuer: a.issuer.clone(),
            subject: a.subject.clone(),
            delegate: a.delegate,
            action: a.action.clone(),
            validity: a.validity,
            revoker: None,
        })),
        spki_core::Tuple::Bind3(_) => None,
    }
}

pub fn naming(k: &Key, n: &LocalName, subject: FqName, validity: Validity) -> Certificate {
    Certificate::Naming(NamingCert { issuer: k.clone(), name: n.clone(), subject, validity, revoker: None })
}

pub fn auth(k: &Key, subject: FqName, delegate: bool, action: ActionExpr, validity: Validity) -> Certificate {
    Certificate::Auth(AuthCert { issuer: k.clone(), subject, delegate, action, validity, revoker: None })
}
