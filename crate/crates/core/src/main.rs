use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use tatekit::classfield::{class_group, coprime_index_element, QuadIdeal};
use tatekit::curve::{Curve, DEFAULT_DEGREE_CAP};
use tatekit::explorer::{enumerate_curves, twin_search, verify_certificate, TwinParams};
use tatekit::galois::{frobenius_matrix, galois_isomorphic, intertwiners};
use tatekit::isogeny::{cyclic_kernels, hom_lattice, velu};
use tatekit::pairing_model::{four_square_neg_one, graph_isotropy_check, CheckBudget, SymplecticModule};
use tatekit::{Error, Result};

#[derive(Parser)]
#[command(name = "tatekit", version, about = "Torsion, isogenies and class groups over small prime fields")]
struct Cli {
    /// Largest extension degree used to realize torsion points.
    #[arg(long, global = true, default_value_t = DEFAULT_DEGREE_CAP)]
    cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curves over F_p grouped by trace.
    Count {
        #[arg(long)]
        p: u64,
    },
    /// A basis of E[n] and the field it lives over.
    Torsion {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long)]
        n: u64,
    },
    /// Frobenius acting on E[n].
    Frobenius {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long)]
        n: u64,
    },
    /// Frobenius-equivariant maps E[n] -> E'[n], and optionally the lattice
    /// of isogenies up to a degree bound. Curves are given as `A,B`.
    Homspace {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        curve1: String,
        #[arg(long, allow_hyphen_values = true)]
        curve2: String,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        degree_bound: Option<u64>,
    },
    /// Every isogeny with a cyclic rational kernel of the given order.
    Isogeny {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        curve: String,
        #[arg(long)]
        kernel_order: u64,
    },
    /// The four-square matrix with s = -1 mod n and its isotropy check.
    Quaternion {
        #[arg(long)]
        n: u64,
    },
    /// Reduced forms of a negative discriminant.
    Classgroup {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
    },
    /// An element of an ideal `a,b,c` (basis a, b + c w) whose index is
    /// prime to ell.
    CoprimeIndex {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long)]
        ideal: String,
        #[arg(long)]
        ell: u64,
    },
    /// Search F_p for a certified twin pair.
    Twins {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 32)]
        level_bound: u64,
        #[arg(long, default_value_t = 3)]
        p_precision: u32,
        #[arg(long, default_value_t = 12)]
        degree_bound: u64,
    },
}

fn ints(s: &str, count: usize) -> Result<Vec<i64>> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Precondition(format!("cannot parse '{s}'")))?;
    if v.len() != count {
        return Err(Error::Precondition(format!("expected {count} integers in '{s}'")));
    }
    Ok(v)
}

fn curve(p: u64, s: &str) -> Result<Curve> {
    let v = ints(s, 2)?;
    Curve::new(p, v[0], v[1])
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable output")
}

fn run(cli: Cli) -> Result<Value> {
    let cap = cli.cap;
    match cli.command {
        Command::Count { p } => {
            let classes = enumerate_curves(p)?;
            let total: usize = classes.iter().map(|c| c.total_curves()).sum();
            Ok(json!({ "p": p, "curves": total, "classes": classes }))
        }
        Command::Torsion { p, a, b, n } => {
            let e = Curve::new(p, a, b)?;
            let basis = e.torsion_basis(n, cap)?;
            Ok(json!({
                "curve": e,
                "n": n,
                "field_degree": basis.degree(),
                "basis": [basis.p(), basis.q()],
                "weil_pairing": basis.weil_value()?.coeffs(),
            }))
        }
        Command::Frobenius { p, a, b, n } => {
            let e = Curve::new(p, a, b)?;
            let f = frobenius_matrix(&e, n, cap)?;
            Ok(json!({
                "curve": e,
                "trace": e.trace(),
                "frobenius": f,
                "characteristic_polynomial_holds": f.satisfies_char_poly(e.trace(), p),
            }))
        }
        Command::Homspace { p, curve1, curve2, n, degree_bound } => {
            let (e, e2) = (curve(p, &curve1)?, curve(p, &curve2)?);
            let m = intertwiners(&e, &e2, n, cap)?;
            let g = galois_isomorphic(&e, &e2, n, cap)?;
            let mut out = json!({
                "curves": [e, e2],
                "traces": [e.trace(), e2.trace()],
                "n": n,
                "cardinality": m.cardinality().to_string(),
                "generators": m.generators(),
                "isomorphic": g.isomorphic,
                "witness": g.witness,
            });
            if let Some(bound) = degree_bound {
                out["lattice"] = to_value(&*hom_lattice(&e, &e2, bound, cap)?);
            }
            Ok(out)
        }
        Command::Isogeny { p, curve: c, kernel_order } => {
            let e = curve(p, &c)?;
            let isogenies = cyclic_kernels(&e, kernel_order, cap)?
                .iter()
                .map(|k| velu(&e, k))
                .collect::<Result<Vec<_>>>()?;
            Ok(json!({ "curve": e, "kernel_order": kernel_order, "isogenies": isogenies }))
        }
        Command::Quaternion { n } => {
            let q = four_square_neg_one(n)?;
            let k = SymplecticModule::new(n, 1)?;
            let iso = graph_isotropy_check(&q, &k, &CheckBudget::default());
            Ok(json!({
                "n": n,
                "s": q.s(),
                "quadruple": [q.a, q.b, q.c, q.d],
                "matrix": q.matrix,
                "scaled_orthogonal": q.is_scaled_orthogonal(),
                "isotropy": iso,
                "isotropic": iso.isotropic(),
            }))
        }
        Command::Classgroup { disc } => Ok(to_value(&class_group(disc)?)),
        Command::CoprimeIndex { disc, ideal, ell } => {
            let v = ints(&ideal, 3)?;
            let i = QuadIdeal::new(disc, v[0], v[1], v[2])?;
            Ok(to_value(&coprime_index_element(&i, ell)?))
        }
        Command::Twins { p, level_bound, p_precision, degree_bound } => {
            let params = TwinParams {
                level_bound,
                p_precision,
                degree_bound,
                cap,
                ..TwinParams::default()
            };
            let search = twin_search(p, &params)?;
            match &search.certificate {
                Some(cert) => {
                    let v = verify_certificate(cert, &params)?;
                    if !v.passed() {
                        return Err(Error::Internal(format!(
                            "certificate failed re-verification: {:?}",
                            v.failures
                        )));
                    }
                    Ok(to_value(cert))
                }
                None => Err(Error::NotFound(format!(
                    "no certified pair over F_{p} among {} candidates",
                    search.candidates
                ))),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", json!({ "error": err.to_string(), "code": err.exit_code() }));
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
