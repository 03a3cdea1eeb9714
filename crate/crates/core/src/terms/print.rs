use std::fmt;

use num_traits::{One, Signed};

use super::{Rational, Term, TermKind};

/// SMT-LIB style numeral: `3`, `(- 3)`, `(/ 1 2)`, `(- (/ 1 2))`.
pub fn fmt_rational(q: &Rational) -> String {
    let abs = q.abs();
    let body = if abs.is_integer() {
        abs.numer().to_string()
    } else {
        format!("(/ {} {})", abs.numer(), abs.denom())
    };
    if q.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

pub(crate) fn fmt_scaled(t: &Term, k: &Rational) -> String {
    if k.is_one() {
        t.to_string()
    } else {
        format!("(* {} {})", fmt_rational(k), t)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            TermKind::Var(v) => f.write_str(&v.name),
            TermKind::App(g, args) if args.is_empty() => f.write_str(g.name()),
            TermKind::App(g, args) => {
                write!(f, "({}", g.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            TermKind::Rat(q) => f.write_str(&fmt_rational(q)),
            TermKind::Bool(b) => write!(f, "{b}"),
            TermKind::Lin(lc) => {
                f.write_str("(+")?;
                for (t, k) in &lc.terms {
                    write!(f, " {}", fmt_scaled(t, k))?;
                }
                if !num_traits::Zero::is_zero(&lc.constant) {
                    write!(f, " {}", fmt_rational(&lc.constant))?;
                }
                f.write_str(")")
            }
        }
    }
}
