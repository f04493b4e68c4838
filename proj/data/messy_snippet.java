public class Inv {
    public static double p(java.util.List<String[]> l, int m) {
        double t = 0; int c = 0;
        for (int i = 0; i < l.size(); i++) {
            String[] r = l.get(i);
            if (r.length > 3) {
                if (r[3].equals("Y")) {
                    double x = Double.parseDouble(r[1]) * Integer.parseInt(r[2]);
                    if (m == 1) { x = x - x * 0.1; } else if (m == 2) { x = x - x * 0.15; } else { if (x > 100) x = x - 5; }
                    t += x; c++;
                } else { if (r[3].equals("N") && m != 0) { t -= 0; } }
            }
        }
        if (c == 0) return 0;
        return t;
    }
}
