//! Text syntax for closed-form scalar fields.
//!
//! Grammar (whitespace-insensitive, case-sensitive names):
//!
//! ```text
//! field := NUMBER                                    constant
//!        | zero
//!        | poly(POLY)                                polynomial in x, y, z
//!        | corner(L [, T0 [, CX, CY]])               planar corner harmonic
//!        | radial(P [, CX, CY, CZ])                  |x - c|^P
//!        | bump(R [, CX, CY, CZ])                    smooth bump, radius R
//!        | sin(KX, KY, KZ [, PHASE])                 sin(k.x + phase)
//!        | cos(KX, KY, KZ [, PHASE])
//!        | sum(field, ...)
//!        | product(field, ...)
//!        | scale(NUMBER, field)
//! ```
//!
//! `write_field` emits a canonical form that `parse_field` accepts and
//! that reparses to an equal value.

use conelab::field::ScalarField;
use conelab::poly::Polynomial;

pub fn parse_field(src: &str, dim: usize) -> Result<ScalarField, String> {
    let mut cur = Cursor { src: src.as_bytes(), pos: 0 };
    let f = cur.field(dim)?;
    cur.skip_ws();
    if cur.pos != cur.src.len() {
        return Err(format!("unexpected trailing field input `{}`", &src[cur.pos..]));
    }
    Ok(f)
}

pub fn write_field(f: &ScalarField) -> String {
    match f {
        ScalarField::Const(c) if *c == 0.0 => "zero".to_string(),
        ScalarField::Const(c) => format!("{c}"),
        ScalarField::Poly { poly, .. } => format!("poly({poly})"),
        ScalarField::Corner { lambda, theta0, center } => {
            if *theta0 == 0.0 && *center == [0.0, 0.0] {
                format!("corner({lambda})")
            } else {
                format!("corner({lambda}, {theta0}, {}, {})", center[0], center[1])
            }
        }
        ScalarField::Radial { power, center } => {
            format!("radial({power}, {}, {}, {})", center[0], center[1], center[2])
        }
        ScalarField::Bump { radius, center } => {
            format!("bump({radius}, {}, {}, {})", center[0], center[1], center[2])
        }
        ScalarField::Sin { k, phase } => {
            if *phase == 0.0 {
                format!("sin({}, {}, {})", k[0], k[1], k[2])
            } else {
                format!("sin({}, {}, {}, {phase})", k[0], k[1], k[2])
            }
        }
        ScalarField::Cos { k, phase } => {
            if *phase == 0.0 {
                format!("cos({}, {}, {})", k[0], k[1], k[2])
            } else {
                format!("cos({}, {}, {}, {phase})", k[0], k[1], k[2])
            }
        }
        ScalarField::Sum(fs) => {
            let parts: Vec<String> = fs.iter().map(write_field).collect();
            format!("sum({})", parts.join(", "))
        }
        ScalarField::Product(fs) => {
            let parts: Vec<String> = fs.iter().map(write_field).collect();
            format!("product({})", parts.join(", "))
        }
        ScalarField::Scale(s, inner) => format!("scale({s}, {})", write_field(inner)),
    }
}

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<(), String> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!(
                "expected `{}` at position {} of the field expression",
                b as char, self.pos
            ))
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .map(|b| b.is_ascii_lowercase() || b == b'_')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<f64, String> {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .map(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let span = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = span
            .parse()
            .map_err(|_| format!("expected a number, found `{span}`"))?;
        if !v.is_finite() {
            return Err(format!("field numbers must be finite, got `{span}`"));
        }
        Ok(v)
    }

    /// Comma-separated numbers up to the closing parenthesis, which is
    /// consumed.
    fn num_args(&mut self) -> Result<Vec<f64>, String> {
        let mut out = Vec::new();
        loop {
            out.push(self.number()?);
            self.skip_ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return Err("expected `,` or `)` in the argument list".to_string()),
            }
        }
    }

    fn field(&mut self, dim: usize) -> Result<ScalarField, String> {
        self.skip_ws();
        match self.peek() {
            Some(b) if b.is_ascii_digit() || matches!(b, b'-' | b'+' | b'.') => {
                Ok(ScalarField::Const(self.number()?))
            }
            Some(b) if b.is_ascii_lowercase() => {
                let name = self.ident();
                if name == "zero" {
                    return Ok(ScalarField::zero());
                }
                self.expect(b'(')?;
                match name.as_str() {
                    "poly" => {
                        let start = self.pos;
                        while self.peek().map(|b| b != b')').unwrap_or(false) {
                            self.pos += 1;
                        }
                        let span =
                            String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                        self.expect(b')')?;
                        let p = Polynomial::parse(span.trim(), dim)
                            .map_err(|e| e.to_string())?;
                        Ok(ScalarField::poly(p))
                    }
                    "corner" => {
                        if dim != 2 {
                            return Err("corner fields are planar; the domain must be 2D"
                                .to_string());
                        }
                        let a = self.num_args()?;
                        match a.len() {
                            1 => Ok(ScalarField::corner(a[0])),
                            2 => Ok(ScalarField::Corner {
                                lambda: a[0],
                                theta0: a[1],
                                center: [0.0, 0.0],
                            }),
                            4 => Ok(ScalarField::Corner {
                                lambda: a[0],
                                theta0: a[1],
                                center: [a[2], a[3]],
                            }),
                            n => Err(format!("corner takes 1, 2, or 4 arguments, got {n}")),
                        }
                    }
                    "radial" | "bump" => {
                        let a = self.num_args()?;
                        let (lead, center) = match a.len() {
                            1 => (a[0], [0.0; 3]),
                            4 => (a[0], [a[1], a[2], a[3]]),
                            n => {
                                return Err(format!(
                                    "{name} takes 1 or 4 arguments, got {n}"
                                ))
                            }
                        };
                        if name == "radial" {
                            Ok(ScalarField::Radial { power: lead, center })
                        } else {
                            Ok(ScalarField::Bump { radius: lead, center })
                        }
                    }
                    "sin" | "cos" => {
                        let a = self.num_args()?;
                        let (k, phase) = match a.len() {
                            3 => ([a[0], a[1], a[2]], 0.0),
                            4 => ([a[0], a[1], a[2]], a[3]),
                            n => {
                                return Err(format!(
                                    "{name} takes 3 or 4 arguments, got {n}"
                                ))
                            }
                        };
                        if name == "sin" {
                            Ok(ScalarField::Sin { k, phase })
                        } else {
                            Ok(ScalarField::Cos { k, phase })
                        }
                    }
                    "sum" | "product" => {
                        let mut parts = Vec::new();
                        loop {
                            parts.push(self.field(dim)?);
                            self.skip_ws();
                            match self.peek() {
                                Some(b',') => self.pos += 1,
                                Some(b')') => {
                                    self.pos += 1;
                                    break;
                                }
                                _ => {
                                    return Err(
                                        "expected `,` or `)` in the field list".to_string()
                                    )
                                }
                            }
                        }
                        if name == "sum" {
                            Ok(ScalarField::Sum(parts))
                        } else {
                            Ok(ScalarField::Product(parts))
                        }
                    }
                    "scale" => {
                        let s = self.number()?;
                        self.expect(b',')?;
                        let inner = self.field(dim)?;
                        self.expect(b')')?;
                        Ok(ScalarField::Scale(s, Box::new(inner)))
                    }
                    other => Err(format!("unknown field function `{other}`")),
                }
            }
            _ => Err("expected a field expression".to_string()),
        }
    }
}
