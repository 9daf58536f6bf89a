/// Generalized Laguerre polynomial `L_k^{(n)}(x)` by the three-term
/// recurrence `(j+1) L_{j+1} = (2j+1+n-x) L_j - (j+n) L_{j-1}`.
pub fn laguerre(k: u32, n: u32, x: f64) -> f64 {
    let nf = f64::from(n);
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + nf - x;
    for j in 1..k {
        let jf = f64::from(j);
        let next = ((2.0 * jf + 1.0 + nf - x) * cur - (jf + nf) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
