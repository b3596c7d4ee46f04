#include <doctest.h>

#include <cstdio>

#include "test_support.hpp"

using namespace modex::test;

TEST_CASE("check-schema distinguishes success, findings, and usage errors") {
  CHECK(runCli({"check-schema", "workflow.mmx"}).exit == 0);
  CHECK(runCli({"check-schema", "org.mmx"}).exit == 0);

  std::string bad = fixturePath("bad_tmp.mmx");
  std::ofstream(bad) << "schema S { entity P { q: ref(S::Ghost)[] } model M { } }";
  CliResult findings = runCli({"check-schema", "bad_tmp.mmx"});
  CHECK(findings.exit == 1);
  CHECK(findings.out.find("UnresolvedReference") != std::string::npos);
  std::remove(bad.c_str());

  CHECK(runCli({"check-schema", "no_such_file.mmx"}).exit == 2);
}

TEST_CASE("eval binds parameters by declared kind") {
  std::string out = tempPath("eval") + ".mex";
  CliResult ok = runCli({"eval", "configurable_approval.mex", "--schema", "workflow.mmx",
                         "--param", "document=Contract", "--param", "approvers=3", "--param",
                         "mode=parallel", "-o", out});
  CHECK(ok.exit == 0);
  CHECK(ok.out.find("elements: 8") != std::string::npos);
  CHECK(readFile(out) == fixture("golden/approval_contract.mex"));
  std::remove(out.c_str());

  // unbound parameter: usage error
  CliResult missing = runCli({"eval", "configurable_approval.mex", "--schema", "workflow.mmx",
                              "--param", "document=Contract", "--param", "mode=parallel"});
  CHECK(missing.exit == 2);
  CHECK(missing.err.find("approvers") != std::string::npos);

  // non-numeric value for a number parameter
  CliResult badKind = runCli({"eval", "configurable_approval.mex", "--schema", "workflow.mmx",
                              "--param", "document=C", "--param", "approvers=three", "--param",
                              "mode=parallel"});
  CHECK(badKind.exit == 2);

  // undeclared parameter
  CliResult unknown = runCli({"eval", "configurable_approval.mex", "--schema", "workflow.mmx",
                              "--param", "document=C", "--param", "approvers=1", "--param",
                              "mode=parallel", "--param", "bogus=1"});
  CHECK(unknown.exit == 2);
}

TEST_CASE("eval output is byte-identical across runs") {
  std::string a = tempPath("det_a") + ".mex";
  std::string b = tempPath("det_b") + ".mex";
  for (const std::string& out : {a, b}) {
    CliResult r = runCli({"eval", "generic_approval.mex", "--schema", "workflow.mmx", "--param",
                          "document=Contract", "--param", "approvers=2", "--param",
                          "mode=parallel", "--param", "WorkerTask=two_step_write.mex", "-o", out});
    REQUIRE(r.exit == 0);
  }
  CHECK(readFile(a) == readFile(b));
  CHECK(readFile(a) == fixture("golden/two_step_contract.mex"));
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("conform reports violations one per line") {
  CHECK(runCli({"conform", "acme.mex", "--schema", "org.mmx"}).exit == 0);

  // retarget a performer attribute to a number: a PropertyType finding
  std::string broken = fixturePath("broken_tmp.mex");
  std::string text = fixture("golden/approval_judy.mex");
  auto pos = text.find("performer=\"Judy\"");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("performer=\"Judy\"").size(), "performer=7");
  std::ofstream(broken) << text;
  CliResult r = runCli({"conform", "broken_tmp.mex", "--schema", "workflow.mmx"});
  CHECK(r.exit == 1);
  CHECK(r.out.find("PropertyType") != std::string::npos);
  CHECK(r.out.find("\tperformer\t") != std::string::npos);
  std::remove(broken.c_str());

  // an empty model file conforms vacuously
  std::string empty = fixturePath("empty_tmp.mex");
  std::ofstream(empty) << "\n";
  CHECK(runCli({"conform", "empty_tmp.mex", "--schema", "workflow.mmx"}).exit == 0);
  std::remove(empty.c_str());
}

TEST_CASE("transform reproduces the goldens and honors --no-timestamp") {
  std::string out = tempPath("tr_out") + ".mex";
  std::string trace = tempPath("tr_trace") + ".mex";
  CliResult r = runCli({"transform", "--spec", "org2wf.mtx", "--source", "acme.mex",
                        "--source-schema", "org.mmx", "--param", "worker=Judy", "--param",
                        "sensitivity=3", "-o", out, "--trace", trace, "--no-timestamp"});
  REQUIRE(r.exit == 0);
  CHECK(readFile(out) == fixture("golden/approval_judy.mex"));
  CHECK(readFile(trace) == fixture("golden/approval_judy_trace.mex"));

  // with the timestamp on, the trace differs only by that attribute
  std::string trace2 = tempPath("tr_trace2") + ".mex";
  CliResult r2 = runCli({"transform", "--spec", "org2wf.mtx", "--source", "acme.mex",
                         "--source-schema", "org.mmx", "--param", "worker=Judy", "--param",
                         "sensitivity=3", "-o", out, "--trace", trace2});
  REQUIRE(r2.exit == 0);
  CHECK(readFile(trace2).find("timestamp=\"") != std::string::npos);

  std::remove(out.c_str());
  std::remove(trace.c_str());
  std::remove(trace2.c_str());
}

TEST_CASE("transform refuses a non-conforming source up front") {
  std::string broken = fixturePath("acme_broken_tmp.mex");
  std::string text = fixture("acme.mex");
  auto pos = text.find(" manager=<Worker $refByName=\"Grace\"/>");
  REQUIRE(pos != std::string::npos);
  text.erase(pos, std::string(" manager=<Worker $refByName=\"Grace\"/>").size());
  std::ofstream(broken) << text;

  std::string out = tempPath("never") + ".mex";
  CliResult r = runCli({"transform", "--spec", "org2wf.mtx", "--source", "acme_broken_tmp.mex",
                        "--source-schema", "org.mmx", "--param", "worker=Judy", "--param",
                        "sensitivity=3", "-o", out});
  CHECK(r.exit == 1);
  CHECK(r.err.find("conform") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(out)); // nothing was written
  std::remove(broken.c_str());
}

TEST_CASE("trace-check closes the loop and flags broken artifacts") {
  std::string out = tempPath("tc_out") + ".mex";
  std::string trace = tempPath("tc_trace") + ".mex";
  REQUIRE(runCli({"transform", "--spec", "org2wf.mtx", "--source", "acme.mex", "--source-schema",
                  "org.mmx", "--param", "worker=Judy", "--param", "sensitivity=3", "-o", out,
                  "--trace", trace, "--no-timestamp"})
              .exit == 0);

  CHECK(runCli({"trace-check", "--trace", trace, "--target", out, "--source", "acme.mex",
                "--spec", "org2wf.mtx"})
            .exit == 0);

  // removing the top entry breaks coverage
  std::string text = readFile(trace);
  auto pos = text.find("  <TraceEntry name=\"TraceEntry\" ");
  auto end = text.find('\n', pos);
  text.erase(pos, end - pos + 1);
  std::string brokenTrace = tempPath("tc_broken") + ".mex";
  std::ofstream(brokenTrace) << text;
  CliResult r = runCli({"trace-check", "--trace", brokenTrace, "--target", out, "--source",
                        "acme.mex", "--spec", "org2wf.mtx"});
  CHECK(r.exit == 1);

  // a mismatched source file leaves references dangling
  std::string wrongSource = fixturePath("acme_renamed_tmp.mex");
  std::string src = fixture("acme.mex");
  auto npos = src.find("AcmeCorp");
  src.replace(npos, 8, "Umbrella");
  std::ofstream(wrongSource) << src;
  CliResult mismatch = runCli({"trace-check", "--trace", trace, "--target", out, "--source",
                               "acme_renamed_tmp.mex", "--spec", "org2wf.mtx"});
  CHECK(mismatch.exit == 1);
  CHECK(mismatch.out.find("UnresolvedRef") != std::string::npos);

  std::remove(out.c_str());
  std::remove(trace.c_str());
  std::remove(brokenTrace.c_str());
  std::remove(wrongSource.c_str());
}

TEST_CASE("the divergence guard aborts with a domain error and no output") {
  std::string out = tempPath("div") + ".mex";
  CliResult r = runCli({"eval", "divergent.mex", "--schema", "workflow.mmx", "--param",
                        "T=divergent.mex", "-o", out, "--kappa-depth", "16"});
  CHECK(r.exit == 1);
  CHECK(r.err.find("GuardExceeded") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(out));
  std::remove(out.c_str());
}

TEST_CASE("--version and --help work") {
  CliResult v = runCli({"--version"});
  CHECK(v.exit == 0);
  CHECK(v.out.find("modex") != std::string::npos);
  CHECK(runCli({"--help"}).exit == 0);
  CHECK(runCli({}).exit == 2); // a subcommand is required
  CHECK(runCli({"eval"}).exit == 2);
}

TEST_CASE("malformed input files are usage errors") {
  std::string badMex = fixturePath("garbage_tmp.mex");
  std::ofstream(badMex) << "<Task name=\"x\"";
  CHECK(runCli({"conform", "garbage_tmp.mex", "--schema", "workflow.mmx"}).exit == 2);
  CHECK(runCli({"eval", "garbage_tmp.mex", "--schema", "workflow.mmx"}).exit == 2);
  std::remove(badMex.c_str());

  std::string badMmx = fixturePath("garbage_tmp.mmx");
  std::ofstream(badMmx) << "schema {{{";
  CHECK(runCli({"check-schema", "garbage_tmp.mmx"}).exit == 2);
  CHECK(runCli({"eval", "simple_approval.mex", "--schema", "garbage_tmp.mmx"}).exit == 2);
  std::remove(badMmx.c_str());
}

TEST_CASE("transform output is byte-identical across runs") {
  std::string a = tempPath("tr_det_a") + ".mex";
  std::string b = tempPath("tr_det_b") + ".mex";
  std::string ta = tempPath("tr_det_ta") + ".mex";
  std::string tb = tempPath("tr_det_tb") + ".mex";
  for (auto [out, trace] : {std::pair{a, ta}, std::pair{b, tb}}) {
    REQUIRE(runCli({"transform", "--spec", "org2wf.mtx", "--source", "acme.mex",
                    "--source-schema", "org.mmx", "--param", "worker=Judy", "--param",
                    "sensitivity=2", "-o", out, "--trace", trace, "--no-timestamp"})
                .exit == 0);
  }
  CHECK(readFile(a) == readFile(b));
  CHECK(readFile(ta) == readFile(tb));
  for (const auto& f : {a, b, ta, tb}) std::remove(f.c_str());
}
