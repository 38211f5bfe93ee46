// End-to-end checks of the omasgan binary: spawn the real executable and
// inspect exit codes, stderr and produced files.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        ++failures;
        std::cerr << "[cli_tests] FAILED: " << what << "\n";
    }
}

struct RunResult {
    int exit_code;
    std::string output; // stdout + stderr
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(OMAS_CLI_PATH) + " " + args + " 2>&1";
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, ""};
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe)) output += buf;
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

std::string write_config(const std::string& dir, const std::string& extra) {
    const std::string path = dir + "/config.txt";
    std::ofstream f(path);
    f << "dataset = disk\n"
         "data_n = 256\n"
         "batch = 32\n"
         "pool = 64\n"
         "hidden = 8,8\n"
         "task1_epochs = 2\n"
         "task2_epochs = 2\n"
         "task2_steps_per_epoch = 2\n"
         "task3_epochs = 2\n"
         "j_epochs = 2\n"
         "grid_res = 6\n"
         "grid_lo = -2\n"
         "grid_hi = 2\n"
      << extra;
    return path;
}

} // namespace

int main() {
    const std::string dir = (fs::temp_directory_path() / "omas_cli_test").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string config = write_config(dir, "");
    const std::string out = dir + "/out";

    // missing upstream checkpoint: dependency error naming task1
    {
        const RunResult r = run("--config " + config + " --out " + out + " train --stage task2");
        check(r.exit_code != 0, "train task2 without task1 must fail");
        check(r.output.find("task1") != std::string::npos,
              "dependency error names task1, got: " + r.output);
    }
    // invalid config: violated invariant named
    {
        const std::string bad = dir + "/bad.txt";
        std::ofstream f(bad);
        f << "alpha = 0.8\ngamma = 0.5\n";
        f.close();
        const RunResult r = run("--config " + bad + " --out " + out + " train --stage task1");
        check(r.exit_code != 0, "invalid config must fail");
        check(r.output.find("alpha+gamma") != std::string::npos,
              "config error names the constraint, got: " + r.output);
    }
    // synth emits a CSV
    {
        const RunResult r = run("--config " + config + " --out " + out + " synth");
        check(r.exit_code == 0, "synth runs: " + r.output);
        check(fs::exists(out + "/dataset.csv"), "synth wrote dataset.csv");
    }
    // full train + score + evaluate + ablate
    {
        RunResult r = run("--config " + config + " --out " + out + " train --stage all");
        check(r.exit_code == 0, "train all runs: " + r.output);
        check(fs::exists(out + "/checkpoints/j.omas"), "train all wrote j.omas");

        r = run("--config " + config + " --out " + out + " score --mode full");
        check(r.exit_code == 0, "score runs: " + r.output);
        check(fs::exists(out + "/scores_full.csv"), "score wrote scores_full.csv");

        r = run("--config " + config + " --out " + out + " evaluate --mode full");
        check(r.exit_code == 0, "evaluate runs: " + r.output);
        check(r.output.find("auroc") != std::string::npos, "evaluate prints auroc");

        r = run("--config " + config + " --out " + out + " ablate");
        check(r.exit_code == 0, "ablate runs: " + r.output);
        check(fs::exists(out + "/ablate.csv"), "ablate wrote the table");
    }
    // evaluate on hand-crafted perfect scores reports auroc = 1
    {
        const std::string scores = dir + "/perfect.csv";
        std::ofstream f(scores);
        f << "index,score,label,verdict\n";
        f << "0,0.9,1,abnormal\n0,0.8,1,abnormal\n1,0.2,0,normal\n2,0.1,0,normal\n";
        f.close();
        const RunResult r =
            run("--config " + config + " --out " + out + " evaluate --mode full --scores " + scores);
        check(r.exit_code == 0, "evaluate on crafted scores: " + r.output);
        check(r.output.find("auroc,1") != std::string::npos,
              "perfect scores give auroc 1.0, got: " + r.output);
    }
    // unknown stage errors out
    {
        const RunResult r = run("--config " + config + " --out " + out + " train --stage task9");
        check(r.exit_code != 0, "unknown stage fails");
    }

    fs::remove_all(dir);
    if (failures == 0) std::cout << "[cli_tests] all checks passed\n";
    return failures == 0 ? 0 : 1;
}
