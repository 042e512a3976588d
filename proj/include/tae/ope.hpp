#pragma once

// One-pass evaluation: init on frame-1 ground truth, update on every later
// frame, no re-initialization. Sequences evaluate independently and may run
// in parallel.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tae/dataset.hpp"
#include "tae/enhance.hpp"
#include "tae/image_io.hpp"
#include "tae/metrics.hpp"
#include "tae/model.hpp"
#include "tae/tracker.hpp"

namespace tae {

using TrackerFactory = std::function<std::unique_ptr<TrackerAdapter>(const SequenceRecord&)>;

struct EnhancerHandle {
  const TaeModel* model = nullptr;
  EnhanceMode mode = EnhanceMode::kTargetAwareMultiCurve;
};

struct OpeResult {
  std::vector<TrackRun> runs;
  MetricReport report;
};

namespace detail {

inline TrackRun run_sequence(const SequenceRecord& seq, const TrackerFactory& make_tracker,
                             const std::optional<EnhancerHandle>& enhancer) {
  if (seq.frames.size() < 2) {
    throw std::runtime_error("ope: sequence '" + seq.id + "' has fewer than 2 frames");
  }
  if (!seq.boxes.front()) {
    throw std::runtime_error("ope: sequence '" + seq.id + "' lacks first-frame ground truth");
  }
  auto prepare = [&](const std::filesystem::path& path) {
    Tensor frame = read_image(path);
    if (enhancer) frame = enhancer->model->enhance(frame, enhancer->mode, nullptr).enhanced;
    return frame;
  };

  TrackRun run;
  run.sequence_id = seq.id;
  run.boxes.reserve(seq.frames.size());
  run.frame_ms.reserve(seq.frames.size());

  std::unique_ptr<TrackerAdapter> tracker = make_tracker(seq);
  const BBox init_box = *seq.boxes.front();

  auto t0 = std::chrono::steady_clock::now();
  tracker->init(prepare(seq.frames.front()), init_box);
  run.boxes.push_back(init_box);
  run.frame_ms.push_back(std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0).count());

  BBox last = init_box;
  for (std::size_t f = 1; f < seq.frames.size(); ++f) {
    t0 = std::chrono::steady_clock::now();
    try {
      last = tracker->update(prepare(seq.frames[f]));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: sequence '%s' frame %zu: tracker failed (%s); keeping last box\n",
                   seq.id.c_str(), f + 1, e.what());
    }
    run.boxes.push_back(last);
    run.frame_ms.push_back(std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t0).count());
  }
  return run;
}

}  // namespace detail

inline OpeResult run_ope(const std::vector<SequenceRecord>& sequences,
                         const TrackerFactory& make_tracker,
                         const std::optional<EnhancerHandle>& enhancer = std::nullopt,
                         int jobs = 1) {
  if (sequences.empty()) throw std::invalid_argument("ope: empty sequence set");
  OpeResult result;
  result.runs.resize(sequences.size());

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(sequences.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      result.runs[i] = detail::run_sequence(sequences[i], make_tracker, enhancer);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t]() {
        try {
          while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= sequences.size()) break;
            result.runs[i] = detail::run_sequence(sequences[i], make_tracker, enhancer);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<std::pair<std::string, std::vector<std::optional<BBox>>>> gt;
  gt.reserve(sequences.size());
  for (const auto& s : sequences) gt.emplace_back(s.id, s.boxes);
  result.report = compute_metrics(result.runs, gt);
  return result;
}

}  // namespace tae
