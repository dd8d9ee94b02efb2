// Accumulation without a reduction clause.
int a[100];

int result;

int main() {
  int i, sum;
  sum = 0;
#pragma omp parallel for
  for (i = 0; i < 100; i++)
    sum += a[i];
  result = sum;
}
