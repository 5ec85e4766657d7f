//! SPKI/SDSI certificates, tuple reduction and a closed-semantics oracle.

pub mod action;
pub mod cert;
pub mod codec;
pub mod interval;
pub mod principal;
pub mod sexpr;

pub use action::{Action, ActionExpr, Atom};
pub use cert::{Auth5, AuthCert, Bind3, Certificate, Crl, Formula, Name4, NamingCert, Tuple};
pub use interval::{End, Validity};
pub use principal::{FqName, Key, LocalName, PrincipalExpr};
pub mod engine;
pub mod semantics;
