//! Parser for the distribution mini-language:
//! `name '(' arg (',' arg)* ')'` with decimal arguments. Only `atomzero`
//! takes a nested specification as its second argument.

use super::{stable, DistributionSpec, Law};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

enum Arg {
    Num(f64),
    Spec(DistributionSpec),
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected distribution name");
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => {
                self.pos = start;
                self.err(format!("expected decimal number, found '{text}'"))
            }
        }
    }

    fn spec(&mut self) -> Result<DistributionSpec> {
        let name_pos = {
            self.skip_ws();
            self.pos
        };
        let name = self.ident()?;
        self.expect(b'(')?;
        let mut args = Vec::new();
        self.skip_ws();
        if self.src.get(self.pos) != Some(&b')') {
            loop {
                self.skip_ws();
                let nested = name == "atomzero" && args.len() == 1;
                if nested {
                    args.push(Arg::Spec(self.spec()?));
                } else {
                    args.push(Arg::Num(self.number()?));
                }
                self.skip_ws();
                if self.src.get(self.pos) == Some(&b',') {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(b')')?;
        build(name, args, name_pos)
    }
}

fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

fn build(name: &str, args: Vec<Arg>, pos: usize) -> Result<DistributionSpec> {
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Parse {
                pos,
                msg: format!("{name} takes {n} argument(s), got {}", args.len()),
            })
        }
    };
    let num = |i: usize| -> f64 {
        match &args[i] {
            Arg::Num(x) => *x,
            Arg::Spec(_) => f64::NAN,
        }
    };
    match name {
        "exp" => {
            arity(1)?;
            let rate = num(0);
            if rate <= 0.0 {
                return domain(format!("exp rate must be > 0, got {rate}"));
            }
            Ok(DistributionSpec::new(format!("exp({})", fmt_num(rate)), Law::Exp { rate }))
        }
        "uniform" => {
            arity(2)?;
            let (a, b) = (num(0), num(1));
            if !(a >= 0.0 && a < b) {
                return domain(format!("uniform needs 0 <= a < b, got ({a}, {b})"));
            }
            Ok(DistributionSpec::new(
                format!("uniform({},{})", fmt_num(a), fmt_num(b)),
                Law::Uniform { a, b },
            ))
        }
        "pareto" => {
            arity(2)?;
            let (beta, xm) = (num(0), num(1));
            if beta <= 0.0 || xm <= 0.0 {
                return domain(format!("pareto needs beta > 0 and xm > 0, got ({beta}, {xm})"));
            }
            Ok(DistributionSpec::new(
                format!("pareto({},{})", fmt_num(beta), fmt_num(xm)),
                Law::Pareto { beta, xm },
            ))
        }
        "weibull" => {
            arity(2)?;
            let (shape, scale) = (num(0), num(1));
            if shape <= 0.0 || scale <= 0.0 {
                return domain(format!("weibull needs shape > 0 and scale > 0, got ({shape}, {scale})"));
            }
            Ok(DistributionSpec::new(
                format!("weibull({},{})", fmt_num(shape), fmt_num(scale)),
                Law::Weibull { shape, scale },
            ))
        }
        "halfnormal" => {
            arity(1)?;
            let sigma = num(0);
            if sigma <= 0.0 {
                return domain(format!("halfnormal sigma must be > 0, got {sigma}"));
            }
            Ok(DistributionSpec::new(
                format!("halfnormal({})", fmt_num(sigma)),
                Law::HalfNormal { sigma },
            ))
        }
        "lognormal" => {
            arity(2)?;
            let (mu, sigma) = (num(0), num(1));
            if sigma <= 0.0 {
                return domain(format!("lognormal sigma must be > 0, got {sigma}"));
            }
            Ok(DistributionSpec::new(
                format!("lognormal({},{})", fmt_num(mu), fmt_num(sigma)),
                Law::LogNormal { mu, sigma },
            ))
        }
        "constant" => {
            arity(1)?;
            let c = num(0);
            if c < 0.0 {
                return domain(format!("constant must be >= 0, got {c}"));
            }
            Ok(DistributionSpec::new(format!("constant({})", fmt_num(c)), Law::Constant { c }))
        }
        "atomzero" => {
            arity(2)?;
            let p0 = num(0);
            let Arg::Spec(base) = &args[1] else {
                return Err(Error::Parse {
                    pos,
                    msg: "atomzero expects a nested distribution as second argument".into(),
                });
            };
            if !(0.0..1.0).contains(&p0) {
                return domain(format!("atomzero needs 0 <= p0 < 1, got {p0}"));
            }
            Ok(DistributionSpec::new(
                format!("atomzero({},{})", fmt_num(p0), base.name()),
                Law::AtomZero { p0, base: base.clone() },
            ))
        }
        "loglight" => {
            arity(0)?;
            Ok(DistributionSpec::new("loglight()".into(), Law::LogLight))
        }
        "stablemod" => {
            arity(1)?;
            let alpha = num(0);
            if !(alpha > 0.0 && alpha <= 2.0) {
                return domain(format!("stablemod needs 0 < alpha <= 2, got {alpha}"));
            }
            let name = format!("stablemod({})", fmt_num(alpha));
            if alpha == 2.0 {
                // |S| for S ~ N(0, 2): exact, no table needed
                return Ok(DistributionSpec::new(
                    name,
                    Law::HalfNormal {
                        sigma: std::f64::consts::SQRT_2,
                    },
                ));
            }
            Ok(DistributionSpec::new(
                name,
                Law::StableMod {
                    alpha,
                    table: stable::table(alpha),
                },
            ))
        }
        other => Err(Error::Parse {
            pos,
            msg: format!("unknown distribution '{other}'"),
        }),
    }
}

/// Parse a textual distribution specification such as `"pareto(3, 1)"` or
/// `"atomzero(0.3, exp(1))"`.
pub fn parse_spec(text: &str) -> Result<DistributionSpec> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let spec = p.spec()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.err("trailing input");
    }
    Ok(spec)
}
