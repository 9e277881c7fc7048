#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pptlab/corpus_builders.hpp"
#include "pptlab/error.hpp"
#include "pptlab/fewshot.hpp"
#include "pptlab/harness.hpp"
#include "pptlab/model.hpp"
#include "pptlab/pvp.hpp"
#include "pptlab/report.hpp"
#include "pptlab/tokenization.hpp"

namespace py = pybind11;
using namespace pptlab;

namespace {

std::vector<Document> to_documents(const std::vector<std::vector<std::string>>& docs) {
  std::vector<Document> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) out.push_back({"doc" + std::to_string(i), docs[i]});
  return out;
}

std::vector<std::string> to_json_lines(const std::vector<PretrainExample>& examples) {
  std::vector<std::string> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(example_to_json_line(ex));
  return out;
}

std::vector<ExperimentResult> results_from_lines(const std::vector<std::string>& lines) {
  std::vector<ExperimentResult> out;
  for (const auto& l : lines) out.push_back(result_from_json_line(l));
  return out;
}

TaskInstance make_instance(const std::map<std::string, std::string>& slots, std::optional<int> label) {
  return TaskInstance{slots, label};
}

py::dict split_to_dict(const FewShotSplit& s) {
  auto instances = [](const std::vector<TaskInstance>& v) {
    py::list l;
    for (const auto& t : v) {
      py::dict d;
      d["slots"] = t.slots;
      d["label"] = t.label;
      l.append(d);
    }
    return l;
  };
  py::dict d;
  d["train"] = instances(s.train);
  d["dev"] = instances(s.dev);
  d["test_size"] = s.test.size();
  d["train_index"] = s.train_index;
  d["dev_index"] = s.dev_index;
  d["n_class"] = s.n_class;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pptlab, m) {
  m.doc() = "Native core of pptlab";
  py::register_exception<Error>(m, "PptlabError", PyExc_RuntimeError);

  m.def("tokenize", &tokenize, py::arg("text"));
  m.def("normalize", &normalize, py::arg("text"));
  m.def("reserved_words", &reserved_words);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static(
          "build",
          [](const std::vector<std::string>& corpus, std::size_t max_size, const std::vector<std::string>& reserved) {
            return Vocabulary::build(corpus, max_size, reserved);
          },
          py::arg("corpus"), py::arg("max_size"), py::arg("reserved") = std::vector<std::string>{})
      .def_static("load", &Vocabulary::load, py::arg("path"))
      .def("save", &Vocabulary::save, py::arg("path"))
      .def("__len__", &Vocabulary::size)
      .def_property_readonly("tokens", &Vocabulary::tokens)
      .def("encode", &Vocabulary::encode, py::arg("text"))
      .def("decode", [](const Vocabulary& v, const std::vector<TokenId>& ids) { return v.decode(ids); })
      .def("find", &Vocabulary::find, py::arg("token"));

  m.def(
      "render",
      [](const std::string& format, const std::map<std::string, std::string>& slots, int n_labels,
         std::optional<int> n_options, std::optional<int> label) {
        const auto pvp = make_builtin_pvp(parse_format(format), n_labels, n_options);
        return render_text(pvp.pattern, make_instance(slots, label));
      },
      py::arg("format"), py::arg("slots"), py::arg("n_labels") = 0, py::arg("n_options") = std::nullopt,
      py::arg("label") = std::nullopt, "Render an instance with the built-in pattern of a format.");
  m.def(
      "verbalizer",
      [](const std::string& format, int n_labels, std::optional<int> n_options) {
        return make_builtin_pvp(parse_format(format), n_labels, n_options).verbalizer.words();
      },
      py::arg("format"), py::arg("n_labels") = 0, py::arg("n_options") = std::nullopt);

  m.def(
      "option_config",
      [](int k) {
        const auto c = option_config_for(k);
        py::dict d;
        d["num_options"] = c.num_options;
        d["max_query_len"] = c.max_query_len;
        d["max_option_len"] = c.max_option_len;
        d["n_positive"] = c.n_positive;
        d["n_neg_same_doc"] = c.n_neg_same_doc;
        d["n_neg_diff_doc"] = c.n_neg_diff_doc;
        return d;
      },
      py::arg("num_options"));

  m.def(
      "build_nsp3",
      [](const std::vector<std::vector<std::string>>& docs, std::size_t n, std::uint64_t seed) {
        return to_json_lines(build_nsp3(to_documents(docs), n, seed));
      },
      py::arg("documents"), py::arg("n"), py::arg("seed"));
  m.def(
      "build_nss",
      [](const std::vector<std::vector<std::string>>& docs, std::size_t n, std::uint64_t seed, int num_options) {
        return to_json_lines(build_nss(to_documents(docs), n, seed, num_options));
      },
      py::arg("documents"), py::arg("n"), py::arg("seed"), py::arg("num_options") = 6);
  m.def(
      "build_unified_mc",
      [](const std::vector<std::vector<std::string>>& docs, std::size_t n, std::uint64_t seed) {
        return to_json_lines(build_unified_mc(to_documents(docs), n, seed));
      },
      py::arg("documents"), py::arg("n"), py::arg("seed"));
  m.def(
      "build_pseudo_ssc",
      [](const std::vector<std::vector<std::string>>& docs, std::size_t n, std::uint64_t seed) {
        return to_json_lines(build_pseudo_ssc(to_documents(docs), lexicon_annotator, n, seed).examples);
      },
      py::arg("documents"), py::arg("n"), py::arg("seed"),
      "Pseudo-labelled sentiment examples using the built-in lexicon annotator.");

  m.def("label_counts", &label_counts, py::arg("n_class"), py::arg("samples"), py::arg("seed"));
  m.def(
      "sample_fewshot",
      [](const std::filesystem::path& task, std::uint64_t seed, std::size_t samples) {
        return split_to_dict(sample_fewshot(load_dataset(task), seed, samples));
      },
      py::arg("task"), py::arg("seed"), py::arg("samples") = kFewShotSamples,
      "Few-shot train/dev split of a downstream JSONL file.");

  m.def(
      "count_tunable",
      [](const std::string& method, std::size_t prompt_length, int d_model, std::size_t vocab_size) {
        ModelConfig c;
        c.d_model = d_model;
        if (vocab_size) c.vocab_size = static_cast<int>(vocab_size);
        return count_tunable(c, prompt_length, is_prompt_method(parse_method(method)) ? TuneMode::PT : TuneMode::FT);
      },
      py::arg("method"), py::arg("prompt_length") = kDefaultPromptLength, py::arg("d_model") = ModelConfig{}.d_model,
      py::arg("vocab_size") = 0);

  m.def(
      "run_experiment",
      [](const std::string& method, const std::filesystem::path& task, const std::filesystem::path& workdir,
         const std::vector<std::uint64_t>& seeds, std::size_t samples, int epochs, bool f1) {
        ExperimentSpec spec;
        spec.method = parse_method(method);
        spec.task = task.stem().string();
        spec.seeds = seeds;
        spec.samples = samples;
        spec.report_f1 = f1;
        ExperimentConfig cfg;
        cfg.workdir = workdir;
        cfg.tune.epochs = epochs;
        const auto data = load_dataset(task);
        const auto bundle = load_model(workdir / "model.bin");
        std::optional<ModelBundle> lm;
        if (spec.method == Method::LMAdaption) lm = load_model(workdir / "model_lm.bin");
        const ExperimentContext ctx{&bundle.model, lm ? &lm->model : nullptr, &bundle.vocab};
        py::gil_scoped_release release;
        return result_to_json_line(run_experiment(spec, data, cfg, ctx));
      },
      py::arg("method"), py::arg("task"), py::arg("workdir"), py::arg("seeds") = kDefaultSeeds,
      py::arg("samples") = kFewShotSamples, py::arg("epochs") = TuneConfig{}.epochs, py::arg("f1") = false,
      "Runs one method over seeds with <workdir>/model.bin; returns a result JSON line.");

  m.def("format_cell", &format_cell, py::arg("mean"), py::arg("std"));
  m.def(
      "render_report",
      [](const std::vector<std::string>& result_lines, const std::string& layout) {
        const auto merged = merge_cells(results_from_lines(result_lines));
        const auto r = render_report(merged, parse_layout(layout));
        return py::make_tuple(r.csv, r.markdown, r.warnings);
      },
      py::arg("results"), py::arg("layout") = "main",
      "Renders result JSON lines; returns (csv, markdown, warnings).");
}
