use super::EmbeddingError;
use crate::linalg::{dot, norm2, triple_product};

/// `aᵀb / (‖a‖₂ ‖b‖₂)`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    let (na, nb) = (dot(a, a), dot(b, b));
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    let denom = (na * nb).sqrt();
    let denom = if denom.is_finite() && denom > 0.0 {
        denom
    } else {
        norm2(a) * norm2(b)
    };
    Ok((dot(a, b) / denom).clamp(-1.0, 1.0))
}

/// Cosine that is defined as 0 when either side is the zero vector.
pub fn cosine_or_zero(a: &[f64], b: &[f64]) -> f64 {
    cosine_similarity(a, b).unwrap_or(0.0)
}

/// `max(cos(v_left, v_p), cos(v_right, v_p))`; a zero context vector is left
/// out of the max.
pub fn pair_similarity(v_left: &[f64], v_right: &[f64], v_p: &[f64]) -> Result<f64, EmbeddingError> {
    if norm2(v_p) == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    let sides = [v_left, v_right]
        .into_iter()
        .filter(|v| norm2(v) > 0.0)
        .map(|v| cosine_similarity(v, v_p))
        .collect::<Result<Vec<f64>, _>>()?;
    sides.into_iter().reduce(f64::max).ok_or(EmbeddingError::EmptyContext)
}

/// `⟨a, b, c⟩ / (‖a‖₃ ‖b‖₃ ‖c‖₃)`.
pub fn triple_similarity(a: &[f64], b: &[f64], c: &[f64]) -> Result<f64, EmbeddingError> {
    // one cube root of the product of cubed norms
    let cube = |v: &[f64]| v.iter().map(|x| x.abs().powi(3)).sum::<f64>();
    let denom = (cube(a) * cube(b) * cube(c)).cbrt();
    if denom == 0.0 || !denom.is_finite() {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok(triple_product(a, b, c) / denom)
}

pub fn triple_or_zero(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    triple_similarity(a, b, c).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_cases() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap();
        assert!((c - 8.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(EmbeddingError::ZeroNorm)
        ));
    }

    #[test]
    fn pair_similarity_cases() {
        let p = [0.2, 0.9];
        assert!((pair_similarity(&p, &[-1.0, 3.0], &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pair_similarity(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = pair_similarity(&[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!((s - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        // zero side excluded even though its "cosine" would otherwise be -inf
        let s = pair_similarity(&[0.0, 0.0], &[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(s, -1.0);
        assert!(matches!(
            pair_similarity(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]),
            Err(EmbeddingError::EmptyContext)
        ));
    }

    #[test]
    fn triple_similarity_cases() {
        let ones = [1.0; 8];
        assert_eq!(triple_similarity(&ones, &ones, &ones).unwrap(), 1.0);
        assert_eq!(triple_similarity(&[1.0, 1.0], &[1.0, -1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(triple_similarity(&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(triple_similarity(&[0.0; 3], &[1.0; 3], &[1.0; 3]).is_err());
    }
}
