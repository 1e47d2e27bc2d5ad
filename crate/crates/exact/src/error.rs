use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("input error: {0}")]
    Input(String),
    #[error("moduli are not pairwise coprime")]
    NonCoprimeModuli,
    #[error("rational reconstruction failed for residue modulo {0}-bit modulus")]
    ReconstructionFailure(u64),
    #[error("fraction reconstruction produced A(0) = 0")]
    DegenerateFraction,
    #[error("leading coefficient is not invertible")]
    NonUnitLeading,
    #[error("repeated interpolation abscissa")]
    RepeatedAbscissa,
}
