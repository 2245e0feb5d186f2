// Test endpoint speaking the external-model wire protocol.
//   echo      logits = signals
//   fixed     logits = [1, 0] per row
//   sum       logits = [sum(x), -sum(x)] per row
//   malformed replies with a line that is not JSON
//   wrong-id  replies with id + 1
//   short     drops the last row
//   sleep     never replies

#include <chrono>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";
  std::string line;
  while (std::getline(std::cin, line)) {
    if (mode == "sleep") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
      return 0;
    }
    if (mode == "malformed") {
      std::cout << "{not json" << std::endl;
      continue;
    }
    const auto request = nlohmann::json::parse(line);
    auto id = request.at("id").get<long long>();
    const auto signals = request.at("signals").get<std::vector<std::vector<double>>>();
    std::vector<std::vector<double>> logits;
    for (const auto& row : signals) {
      if (mode == "fixed") {
        logits.push_back({1.0, 0.0});
      } else if (mode == "sum") {
        double s = 0;
        for (double v : row) s += v;
        logits.push_back({s, -s});
      } else {
        logits.push_back(row);
      }
    }
    if (mode == "wrong-id") ++id;
    if (mode == "short" && !logits.empty()) logits.pop_back();
    std::cout << nlohmann::json{{"id", id}, {"logits", logits}}.dump() << std::endl;
  }
  return 0;
}
