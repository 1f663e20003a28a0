use pyo3::prelude::*;

#[pymodule]
fn csslab_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
