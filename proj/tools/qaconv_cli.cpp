#include <cstdio>

int main() {
  std::puts("qaconv: subcommands not wired up yet");
  return 1;
}
