int a[100];

int result;

int main() {
  int i, last;
#pragma omp parallel for lastprivate(last)
  for (i = 0; i < 100; i++) {
    last = a[i];
  }
  result = last;
}
