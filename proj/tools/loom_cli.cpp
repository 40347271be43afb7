#include <cstdio>

int main() {
  std::puts("loom: placeholder");
  return 0;
}
