use std::path::Path;
use std::process::Command;

#[test]
fn header_is_valid_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        r#"#include "usergnn.h"
int main(void) {
    UsergnnTrainConfig cfg = usergnn_train_config_default();
    UsergnnDataset *ds = NULL;
    size_t blocks[2] = {5, 5};
    UsergnnStatus st = usergnn_dataset_generate_sbm(blocks, 2, 0.5, 0.1, 4, 0.1, 1, &ds);
    (void)cfg;
    usergnn_dataset_free(ds);
    return st == USERGNN_STATUS_OK ? 0 : 1;
}
"#,
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("usergnn.h").exists());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
