use std::fmt;

use super::{BasketInstance, OptimizerError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    /// Continuous in [0, 1]; integral at the optimum by construction.
    Unit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    /// For pair variables, the two asset indices.
    pub pair: Option<(usize, usize)>,
}

/// `sum coef * var <= rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(i64, usize)>,
    pub rhs: i64,
}

/// Linearized mixed-integer model of a basket instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearModel {
    pub variables: Vec<Variable>,
    /// Maximized.
    pub objective: Vec<(i64, usize)>,
    pub constraints: Vec<Constraint>,
}

impl LinearModel {
    pub fn pair_variables(&self) -> impl Iterator<Item = (usize, &Variable)> {
        self.variables.iter().enumerate().filter(|(_, v)| v.pair.is_some())
    }

    /// Whether `assignment` (one value per variable) satisfies every constraint.
    pub fn is_feasible(&self, assignment: &[f64]) -> bool {
        self.constraints.iter().all(|c| {
            let lhs: f64 = c.terms.iter().map(|(k, v)| *k as f64 * assignment[*v]).sum();
            lhs <= c.rhs as f64 + 1e-9
        })
    }
}

/// Binary x_i per asset and a y_ij in [0, 1] per synergy pair.
///
/// For s_ij > 0 the objective pushes y up, so y <= x_i and y <= x_j make it
/// x_i AND x_j. For s_ij < 0 it pushes y down, so y >= x_i + x_j - 1 and
/// y >= 0 are the binding pair. Constraints are stored in `<=` form.
pub fn build_model(inst: &BasketInstance) -> Result<LinearModel, OptimizerError> {
    inst.validate()?;
    let n = inst.n();
    let mut variables: Vec<Variable> = (0..n)
        .map(|i| Variable {
            name: format!("x{i}"),
            kind: VarKind::Binary,
            pair: None,
        })
        .collect();
    let mut objective: Vec<(i64, usize)> = inst
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0)
        .map(|(i, v)| (*v, i))
        .collect();
    let mut constraints = vec![Constraint {
        name: "budget".into(),
        terms: inst.costs.iter().enumerate().map(|(i, c)| (*c, i)).collect(),
        rhs: inst.budget,
    }];

    for (&(i, j), &s) in &inst.synergies {
        let y = variables.len();
        let name = format!("y{i}_{j}");
        variables.push(Variable {
            name: name.clone(),
            kind: VarKind::Unit,
            pair: Some((i, j)),
        });
        objective.push((s, y));
        if s > 0 {
            constraints.push(Constraint {
                name: format!("{name}_le_x{i}"),
                terms: vec![(1, y), (-1, i)],
                rhs: 0,
            });
            constraints.push(Constraint {
                name: format!("{name}_le_x{j}"),
                terms: vec![(1, y), (-1, j)],
                rhs: 0,
            });
        } else if s < 0 {
            constraints.push(Constraint {
                name: format!("{name}_ge_and"),
                terms: vec![(1, i), (1, j), (-1, y)],
                rhs: 1,
            });
            constraints.push(Constraint {
                name: format!("{name}_ge_0"),
                terms: vec![(-1, y)],
                rhs: 0,
            });
        }
    }
    Ok(LinearModel {
        variables,
        objective,
        constraints,
    })
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[(i64, usize)], vars: &[Variable]) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (k, (coef, v)) in terms.iter().enumerate() {
        let name = &vars[*v].name;
        let (sign, mag) = if *coef < 0 { ("-", -coef) } else { ("+", *coef) };
        match (k, mag) {
            (0, 1) if sign == "+" => write!(f, "{name}")?,
            (0, _) if sign == "+" => write!(f, "{mag} {name}")?,
            (0, 1) => write!(f, "- {name}")?,
            (0, _) => write!(f, "- {mag} {name}")?,
            (_, 1) => write!(f, " {sign} {name}")?,
            _ => write!(f, " {sign} {mag} {name}")?,
        }
    }
    Ok(())
}

/// LP-style text: objective, one `<=` constraint per line, bounds, binaries.
impl fmt::Display for LinearModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "maximize")?;
        write!(f, "  obj: ")?;
        write_terms(f, &self.objective, &self.variables)?;
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for c in &self.constraints {
            write!(f, "  {}: ", c.name)?;
            write_terms(f, &c.terms, &self.variables)?;
            writeln!(f, " <= {}", c.rhs)?;
        }
        let units: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Unit)
            .map(|v| v.name.as_str())
            .collect();
        if !units.is_empty() {
            writeln!(f, "bounds")?;
            for name in units {
                writeln!(f, "  0 <= {name} <= 1")?;
            }
        }
        let bins: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.name.as_str())
            .collect();
        writeln!(f, "binary")?;
        if !bins.is_empty() {
            writeln!(f, "  {}", bins.join(" "))?;
        }
        writeln!(f, "end")
    }
}
