//! The full compilation pipeline: parse, defaults, sugar rewrites,
//! elaboration, modifier expansion, lifting, normalization, validation.

use crate::core_model::{
    self, ConstraintAst, CoreModel, ExprAst, TopConstraint, SING,
};
use crate::desugar;
use crate::error::Error;
use crate::solver::temporal_free;
use crate::surface::{self, ConstraintSrc, SourceModel};

/// Parse and apply the syntactic defaults.
pub fn parse_and_default(src: &str) -> Result<SourceModel, Error> {
    Ok(surface::apply_defaults(surface::parse_model(src)?))
}

/// Run the whole front end and return the validated core model.
pub fn compile(src: &str) -> Result<CoreModel, Error> {
    let defaulted = parse_and_default(src)?;
    let rewritten = desugar::rewrite_model(&defaulted);
    let (mut cm, mut raws) = core_model::elaborate(&rewritten)?;

    let violations = core_model::validate_wellformed(&cm);
    if !violations.is_empty() {
        let text = violations
            .iter()
            .map(|v| format!("  {}", v))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(Error::Wellformedness(text));
    }

    desugar::desugar_modifiers(&cm, &mut raws);
    cm.static_filters = build_static_filters(&cm, &raws);
    let (constraints, assertions) = desugar::lift_constraints(&cm, raws);
    cm.constraints = constraints.iter().map(desugar::normalize_top).collect();
    cm.assertions = assertions.iter().map(desugar::normalize_top).collect();

    for tc in cm.constraints.iter().chain(cm.assertions.iter()) {
        if let Err(msg) = desugar::assert_core_grammar(tc) {
            return Err(Error::Wellformedness(format!(
                "internal desugaring error: {}",
                msg
            )));
        }
    }
    Ok(cm)
}

fn build_static_filters(
    _cm: &CoreModel,
    raws: &[core_model::RawConstraint],
) -> Vec<ConstraintAst> {
    let mut out = Vec::new();
    for r in raws {
        if r.is_assert || r.marker.is_some() || !temporal_free(&r.ast) {
            continue;
        }
        let filter = if r.context == SING {
            desugar::subst_this(&r.ast, &ExprAst::Name(SING))
        } else {
            let var = "i".to_string();
            ConstraintAst::All {
                var: var.clone(),
                set: ExprAst::Name(r.context),
                body: Box::new(ConstraintAst::implies(
                    ConstraintAst::Bare(ExprAst::Var(var.clone())),
                    desugar::subst_this(&r.ast, &ExprAst::Var(var)),
                )),
            }
        };
        out.push(desugar::normalize(&filter));
    }
    out
}

/// Parse, rewrite and resolve a goal constraint in top-level context; goals
/// are closed formulas and do not receive the default `G`.
pub fn compile_goal(cm: &CoreModel, text: &str) -> Result<TopConstraint, Error> {
    let expr = surface::parse_goal(text)?;
    let dummy = ConstraintSrc {
        pos: Default::default(),
        is_assert: false,
        marker: None,
        body: expr,
    };
    let rewritten = desugar::desugar_patterns(&desugar::desugar_transitions(&dummy));
    let ast = core_model::resolve_goal(cm, &rewritten.body)?;
    let ast = desugar::subst_this(&ast, &ExprAst::Name(SING));
    Ok(TopConstraint::Global(desugar::normalize(&ast)))
}
