#pragma once

#include <chrono>
#include <cstddef>
#include <mutex>
#include <string>
#include <sys/types.h>
#include <vector>

#include "freqrise/models.hpp"

namespace freqrise {

struct ExternalModelOptions {
  std::chrono::milliseconds timeout{30000};
  std::size_t input_length = 0;  // 0: any
  std::size_t num_classes = 0;   // 0: learned from the first response
};

// Model served by a child process speaking newline-delimited JSON on its
// stdin/stdout:
//   request  {"id": <int>, "signals": [[...], ...]}
//   response {"id": <int>, "logits": [[...], ...]}
// One response line per request line; ids and row counts must match.
// Requests are serialized: one in flight per process.
class ExternalModel final : public Model {
 public:
  // `command` is run through /bin/sh -c.
  explicit ExternalModel(std::string command, ExternalModelOptions options = {});
  ~ExternalModel() override;

  ExternalModel(const ExternalModel&) = delete;
  ExternalModel& operator=(const ExternalModel&) = delete;

  std::size_t input_length() const override { return options_.input_length; }
  std::size_t num_classes() const override;
  bool concurrent_safe() const override { return false; }
  std::vector<double> logits(const SignalBatch& batch) const override;

  const std::string& command() const noexcept { return command_; }

 private:
  void send_line(const std::string& line) const;
  std::string receive_line() const;
  void shutdown() noexcept;

  std::string command_;
  ExternalModelOptions options_;
  pid_t child_ = -1;
  int fd_ = -1;
  mutable std::mutex mutex_;
  mutable std::string pending_;
  mutable long long next_id_ = 0;
  mutable std::size_t classes_ = 0;
};

// Encoders for the wire protocol, exposed for endpoints written in C++.
std::string encode_request(long long id, const SignalBatch& batch);
std::string encode_response(long long id, const std::vector<std::vector<double>>& logits);

}  // namespace freqrise
