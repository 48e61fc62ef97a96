//! Design-matrix construction with treatment contrasts and the
//! X1 / X2 / X3 column partition.
//!
//! A categorical variable with L observed levels codes to L-1 indicator
//! columns against the first level in sorted label order. Interaction
//! columns are elementwise products of their factors' coded columns.
//! Columns from all-categorical terms (and the intercept) form X1,
//! columns built from continuous variables only form X2, and columns
//! whose source term mixes kinds form X3.

use crate::data::{ColumnKind, Dataset};
use crate::formula::ModelSpec;
use crate::matrix::{Matrix, SymmetricPosDef, DEFAULT_RANK_TOL};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("formula references unknown column `{name}`")]
    UnknownVariable { name: String },
    #[error("categorical variable `{column}` has fewer than 2 observed levels")]
    SingleLevelCategorical { column: String },
    #[error("variable `{column}` has missing values in rows {}", format_rows(rows))]
    MissingValues { column: String, rows: Vec<usize> },
    #[error("formula produces no design columns")]
    NoColumns,
    #[error("design needs more rows than columns (n = {n}, p = {p})")]
    TooFewRows { n: usize, p: usize },
    #[error("design matrix is rank deficient: column `{column}` is linearly dependent on earlier columns")]
    RankDeficient { column: String },
}

fn format_rows(rows: &[usize]) -> String {
    const SHOW: usize = 12;
    let mut s: Vec<String> = rows.iter().take(SHOW).map(usize::to_string).collect();
    if rows.len() > SHOW {
        s.push(format!("... ({} total)", rows.len()));
    }
    s.join(", ")
}

/// Partition tag of one design column. The intercept counts toward p1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartTag {
    Intercept,
    Categorical,
    Continuous,
    Mixed,
}

impl PartTag {
    /// Block label: X1 for intercept/categorical, X2 continuous, X3 mixed.
    pub fn block(self) -> &'static str {
        match self {
            PartTag::Intercept | PartTag::Categorical => "X1",
            PartTag::Continuous => "X2",
            PartTag::Mixed => "X3",
        }
    }
}

/// One coded factor of a design column: either a continuous variable or
/// one indicator level of a categorical variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CodedFactor {
    Continuous { var: String },
    Level { var: String, level: String },
}

impl CodedFactor {
    fn coded_name(&self) -> String {
        match self {
            CodedFactor::Continuous { var } => var.clone(),
            CodedFactor::Level { var, level } => format!("{var}{level}"),
        }
    }
}

/// Provenance of one design column.
#[derive(Debug, Clone)]
pub struct DesignColumn {
    pub name: String,
    /// Index into the model spec's term list; `None` for the intercept.
    pub term: Option<usize>,
    pub factors: Vec<CodedFactor>,
    pub tag: PartTag,
}

/// Classify a column by its coded factors: no factors is the intercept,
/// all-indicator columns are X1, all-continuous are X2, mixed are X3.
pub fn classify_column(factors: &[CodedFactor]) -> PartTag {
    if factors.is_empty() {
        return PartTag::Intercept;
    }
    let any_cont = factors.iter().any(|f| matches!(f, CodedFactor::Continuous { .. }));
    let any_cat = factors.iter().any(|f| matches!(f, CodedFactor::Level { .. }));
    match (any_cat, any_cont) {
        (true, false) => PartTag::Categorical,
        (false, true) => PartTag::Continuous,
        (true, true) => PartTag::Mixed,
        (false, false) => unreachable!("non-empty factor list"),
    }
}

/// Full-rank design matrix with column provenance and partition counts.
#[derive(Debug, Clone)]
pub struct PartitionedDesign {
    pub x: Matrix,
    pub columns: Vec<DesignColumn>,
    pub has_intercept: bool,
    /// Raw coded values of every factor referenced by any column, kept so
    /// interaction columns can be rebuilt from modified continuous values.
    factor_values: BTreeMap<CodedFactor, Vec<f64>>,
}

impl PartitionedDesign {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    fn count(&self, pred: impl Fn(PartTag) -> bool) -> usize {
        self.columns.iter().filter(|c| pred(c.tag)).count()
    }

    /// Columns in X1, the intercept included.
    pub fn p1(&self) -> usize {
        self.count(|t| matches!(t, PartTag::Intercept | PartTag::Categorical))
    }

    pub fn p2(&self) -> usize {
        self.count(|t| t == PartTag::Continuous)
    }

    pub fn p3(&self) -> usize {
        self.count(|t| t == PartTag::Mixed)
    }

    /// Design-column indices of the X2 block, in design order.
    pub fn x2_indices(&self) -> Vec<usize> {
        self.tagged(PartTag::Continuous)
    }

    pub fn x3_indices(&self) -> Vec<usize> {
        self.tagged(PartTag::Mixed)
    }

    fn tagged(&self, tag: PartTag) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.tag == tag)
            .map(|(j, _)| j)
            .collect()
    }

    /// The continuous block X2 as a matrix, or `None` when p2 = 0.
    pub fn x2_matrix(&self) -> Option<Matrix> {
        let idx = self.x2_indices();
        if idx.is_empty() {
            None
        } else {
            Some(self.x.select_columns(&idx))
        }
    }

    /// Position within the X2 block of the main-effect column of a
    /// continuous variable, if that variable has one.
    pub fn x2_main_position(&self, var: &str) -> Option<usize> {
        self.x2_indices().iter().position(|&j| {
            let c = &self.columns[j];
            matches!(c.factors.as_slice(),
                     [CodedFactor::Continuous { var: v }] if v == var)
        })
    }

    /// Original coded values of a factor (indicator vector or raw
    /// continuous values).
    pub fn factor_values(&self, factor: &CodedFactor) -> &[f64] {
        self.factor_values
            .get(factor)
            .expect("factor referenced by a design column is always recorded")
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Build the partitioned design matrix for a parsed formula over a dataset.
pub fn build_design(spec: &ModelSpec, data: &Dataset) -> Result<PartitionedDesign, DesignError> {
    let n = data.n_rows();

    // bind variables: kind, coded factors, raw values
    let mut coded: BTreeMap<&str, Vec<CodedFactor>> = BTreeMap::new();
    let mut factor_values: BTreeMap<CodedFactor, Vec<f64>> = BTreeMap::new();
    for var in spec.variables() {
        let col = data
            .column_index(var)
            .ok_or_else(|| DesignError::UnknownVariable { name: var.to_string() })?;
        let missing = data.missing_rows(col);
        if !missing.is_empty() {
            return Err(DesignError::MissingValues { column: var.to_string(), rows: missing });
        }
        match data.kind(col) {
            ColumnKind::Numeric => {
                let f = CodedFactor::Continuous { var: var.to_string() };
                factor_values.insert(f.clone(), data.numeric_values(col));
                coded.insert(var, vec![f]);
            }
            ColumnKind::Label => {
                let levels = data.levels(col);
                if levels.len() < 2 {
                    return Err(DesignError::SingleLevelCategorical { column: var.to_string() });
                }
                // treatment contrasts: first sorted level is the reference
                let cells = data.cells(col);
                let mut factors = Vec::with_capacity(levels.len() - 1);
                for level in &levels[1..] {
                    let f = CodedFactor::Level { var: var.to_string(), level: level.clone() };
                    let ind: Vec<f64> =
                        cells.iter().map(|c| if c == level { 1.0 } else { 0.0 }).collect();
                    factor_values.insert(f.clone(), ind);
                    factors.push(f);
                }
                coded.insert(var, factors);
            }
        }
    }

    // assemble columns: intercept, then one group per term
    let mut columns: Vec<DesignColumn> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    if spec.intercept {
        columns.push(DesignColumn {
            name: "(Intercept)".to_string(),
            term: None,
            factors: Vec::new(),
            tag: PartTag::Intercept,
        });
        values.push(vec![1.0; n]);
    }
    for (ti, term) in spec.terms.iter().enumerate() {
        let pools: Vec<&Vec<CodedFactor>> =
            term.factors.iter().map(|v| &coded[v.as_str()]).collect();
        for combo in cartesian(&pools) {
            let mut col = vec![1.0; n];
            for f in &combo {
                for (v, fv) in col.iter_mut().zip(factor_values[*f].iter()) {
                    *v *= fv;
                }
            }
            let factors: Vec<CodedFactor> = combo.into_iter().cloned().collect();
            let name = factors
                .iter()
                .map(CodedFactor::coded_name)
                .collect::<Vec<_>>()
                .join(":");
            let tag = classify_column(&factors);
            columns.push(DesignColumn { name, term: Some(ti), factors, tag });
            values.push(col);
        }
    }

    let p = columns.len();
    if p == 0 {
        return Err(DesignError::NoColumns);
    }
    if n <= p {
        return Err(DesignError::TooFewRows { n, p });
    }
    let x = Matrix::from_columns(&values).expect("design columns are finite and rectangular");

    // full column rank check
    if let Err(rd) = SymmetricPosDef::from_matrix(&x.gram(), DEFAULT_RANK_TOL) {
        return Err(DesignError::RankDeficient { column: columns[rd.column].name.clone() });
    }

    Ok(PartitionedDesign { x, columns, has_intercept: spec.intercept, factor_values })
}

/// Cartesian product of factor pools, leftmost factor varying slowest.
fn cartesian<'a>(pools: &[&'a Vec<CodedFactor>]) -> Vec<Vec<&'a CodedFactor>> {
    let mut out: Vec<Vec<&CodedFactor>> = vec![Vec::new()];
    for pool in pools {
        let mut next = Vec::with_capacity(out.len() * pool.len());
        for prefix in &out {
            for f in pool.iter() {
                let mut combo = prefix.clone();
                combo.push(f);
                next.push(combo);
            }
        }
        out = next;
    }
    out
}
